import numpy as np
import pytest

from bentlattice import (AccuracyError, Branch, DriveProfile, Gauge,
                         ParameterError, SuperlatticeParams)
from bentlattice.tight_binding import (Boundary, bloch_eigenvector,
                                       bloch_mode_state, dispersion,
                                       evolve_bare, evolve_gauged,
                                       gauge_transform, gaussian_packet_state,
                                       group_velocity)
from bentlattice.two_level import evolve as tl_evolve
from bentlattice.two_level import ground_state
from bentlattice.diagnostics import lattice_transition_probability


def cell_matrix(qa, phi, params):
    """Sublattice-pair generator, assembled directly from the model."""
    off = -2 * params.sigma_cm * np.cos(qa - phi)
    return np.array([[params.delta_cm, off], [off, -params.delta_cm]])


class TestDispersion:
    def test_gap_edge(self, params):
        lo, hi = dispersion(params.q_from_qa(np.pi / 2), params)
        assert hi == pytest.approx(1.817, abs=1e-12)
        assert lo == pytest.approx(-1.817, abs=1e-12)

    def test_zone_center(self, params):
        lo, hi = dispersion(0.0, params)
        assert hi == pytest.approx(4.393345991382878, rel=1e-12)

    def test_quarter_zone(self, params, q_quarter):
        lo, hi = dispersion(q_quarter, params)
        assert hi == pytest.approx(3.361768730891523, rel=1e-12)
        assert lo == -hi


class TestBlochEigenvector:
    @pytest.mark.parametrize("qa", [-1.2, -0.3, 0.0, 0.4, np.pi / 4, 1.5])
    def test_unit_norm_and_orthogonality(self, params, qa):
        q = params.q_from_qa(qa)
        vm = bloch_eigenvector(q, Branch.MINUS, params)
        vp = bloch_eigenvector(q, Branch.PLUS, params)
        assert np.linalg.norm(vm) == pytest.approx(1.0, abs=1e-14)
        assert np.linalg.norm(vp) == pytest.approx(1.0, abs=1e-14)
        assert abs(np.dot(vm, vp)) < 1e-14

    def test_eigen_residual(self, params, q_quarter):
        t0 = cell_matrix(np.pi / 4, 0.0, params)
        lo, hi = dispersion(q_quarter, params)
        for branch, omega in ((Branch.MINUS, lo), (Branch.PLUS, hi)):
            v = bloch_eigenvector(q_quarter, branch, params)
            assert np.linalg.norm(t0 @ v - omega * v) < 1e-12

    def test_gap_edge_convention(self, params):
        q = params.q_from_qa(np.pi / 2)
        assert np.allclose(bloch_eigenvector(q, Branch.MINUS, params), [0, 1])
        assert np.allclose(bloch_eigenvector(q, Branch.PLUS, params), [1, 0])

    def test_gap_edge_massless_rejected(self):
        massless = SuperlatticeParams(2.0, 0.0)
        from bentlattice import DegenerateGapError
        with pytest.raises(DegenerateGapError):
            bloch_eigenvector(massless.q_from_qa(np.pi / 2), Branch.MINUS,
                              massless)


class TestStraightEvolution:
    def test_bloch_mode_is_stationary(self, params, q_quarter):
        state = bloch_mode_state(q_quarter, Branch.MINUS, params)
        straight = DriveProfile.straight()
        traj = evolve_gauged(state, params, straight, z_end=2.0, dz=0.002)
        assert np.max(np.abs(np.abs(traj.states[-1]) - np.abs(state.amplitudes))) < 1e-10

    def test_phase_rate_matches_dispersion(self, params):
        # dispersion-consistency: extracted phase rate of a Bloch mode
        q = params.q_from_qa(0.31)
        state = bloch_mode_state(q, Branch.MINUS, params)
        straight = DriveProfile.straight()
        z_end = 0.5  # short enough that the accumulated phase does not wrap
        traj = evolve_gauged(state, params, straight, z_end=z_end, dz=0.001)
        ratio = traj.states[-1] / state.amplitudes
        rate = np.angle(ratio[params.n_sites // 2]) / z_end
        omega_minus = dispersion(q, params)[0]
        assert rate == pytest.approx(-omega_minus, rel=1e-8)

    def test_gauges_agree_for_straight_axis(self, params, q_quarter):
        straight = DriveProfile.straight()
        gauged = bloch_mode_state(q_quarter, Branch.MINUS, params, Gauge.GAUGED)
        bare = bloch_mode_state(q_quarter, Branch.MINUS, params, Gauge.BARE)
        t1 = evolve_gauged(gauged, params, straight, z_end=0.7, dz=0.001,
                           boundary=Boundary.PERIODIC)
        t2 = evolve_bare(bare, params, straight, z_end=0.7, dz=0.001,
                         boundary=Boundary.PERIODIC)
        assert np.max(np.abs(t1.states[-1] - t2.states[-1])) < 1e-13


class TestUnitarity:
    def test_power_conserved_over_resonant_run(self, params, resonant_drive):
        state = bloch_mode_state(params.q_from_qa(np.pi / 4), Branch.MINUS,
                                 params)
        traj = evolve_gauged(state, params, resonant_drive,
                             z_end=10 * resonant_drive.period_cm,
                             snapshot_every=500)
        power = traj.power()
        assert np.max(np.abs(power / power[0] - 1.0)) < 1e-9

    def test_coarse_step_raises(self, params):
        small = SuperlatticeParams(2.0, 1.817, n_sites=8)
        state = bloch_mode_state(small.q_from_qa(np.pi / 4), Branch.MINUS, small)
        straight = DriveProfile.straight()
        with pytest.raises(AccuracyError, match="dz"):
            evolve_gauged(state, small, straight, z_end=150.0, dz=0.5)


class TestGaugeTransform:
    def test_identity_at_zero_phase(self, params, resonant_drive):
        state = bloch_mode_state(params.q_from_qa(np.pi / 4), Branch.MINUS,
                                 params)
        state.z = resonant_drive.period_cm  # Phi(multiple of the period) = 0
        mapped = gauge_transform(state, resonant_drive, Gauge.BARE)
        assert np.max(np.abs(mapped.amplitudes - state.amplitudes)) < 1e-12

    def test_round_trip(self, params, resonant_drive):
        state = gaussian_packet_state(params.q_from_qa(np.pi / 4), 10.0, params)
        state.z = 0.37
        there = gauge_transform(state, resonant_drive, Gauge.BARE)
        back = gauge_transform(there, resonant_drive, Gauge.GAUGED)
        assert np.max(np.abs(back.amplitudes - state.amplitudes)) < 1e-15

    def test_pure_phase(self, params, resonant_drive):
        state = gaussian_packet_state(params.q_from_qa(np.pi / 4), 10.0, params)
        state.z = 0.81
        mapped = gauge_transform(state, resonant_drive, Gauge.BARE)
        assert np.max(np.abs(np.abs(mapped.amplitudes)
                             - np.abs(state.amplitudes))) < 1e-15


class TestTranslationSymmetry:
    def test_plane_wave_stays_plane_wave(self, params, single_cycle_b):
        # the gauged equation is invariant under two-site translation, so a
        # Bloch input keeps its exact plane-wave form under any drive
        q = params.q_from_qa(np.pi / 4)
        state = bloch_mode_state(q, Branch.MINUS, params)
        traj = evolve_gauged(state, params, single_cycle_b,
                             z_end=single_cycle_b.period_cm,
                             boundary=Boundary.PERIODIC)
        final = traj.states[-1]
        qa = np.pi / 4
        # a_{l+2} = a_l e^{2iqa} site by site (the periodic roll keeps the
        # seam consistent because qa n_sites is a multiple of 2 pi)
        mismatch = np.abs(np.roll(final, -2) - final * np.exp(2j * qa))
        assert np.max(mismatch) < 1e-9


class TestGaugeEquivalence:
    def test_bare_matches_gauged_sitewise(self, params):
        # smooth drive, and a step small enough for the stiff site-linear
        # bare term; the two integrations then agree site by site
        drive = DriveProfile.from_phase_amplitude("sinusoidal", 0.4, 2.8556)
        big = SuperlatticeParams(2.0, 1.817, n_sites=64)
        q = big.q_from_qa(np.pi / 4)
        packet_g = gaussian_packet_state(q, 8.0, big, gauge=Gauge.GAUGED)
        packet_b = packet_g.amplitudes.copy()  # Phi(0) = 0: same amplitudes
        from bentlattice.tight_binding import ModeVector
        bare0 = ModeVector(packet_b, Gauge.BARE, 0.0)
        z_end = 1.0
        tb_bare = evolve_bare(bare0, big, drive, z_end, dz=2.8556 / 16000,
                              boundary=Boundary.HARD_WALL)
        tb_gauged = evolve_gauged(packet_g, big, drive, z_end,
                                  dz=2.8556 / 16000,
                                  boundary=Boundary.HARD_WALL)
        mapped = gauge_transform(tb_bare.final, drive, Gauge.GAUGED)
        assert np.max(np.abs(mapped.amplitudes
                             - tb_gauged.final.amplitudes)) < 1e-8

    def test_single_cycle_edge_jump_is_first_order(self, params):
        # the single-cycle force jumps at the cycle edge, so a fixed-step
        # integration of the bare form carries one O(dz) sample there; the
        # gauged form sees only the continuous phase and is unaffected
        drive = DriveProfile.from_phase_amplitude("single_cycle", 0.4, 0.6676)
        big = SuperlatticeParams(2.0, 1.817, n_sites=64)
        q = big.q_from_qa(np.pi / 4)
        packet_g = gaussian_packet_state(q, 8.0, big, gauge=Gauge.GAUGED)
        from bentlattice.tight_binding import ModeVector
        bare0 = ModeVector(packet_g.amplitudes.copy(), Gauge.BARE, 0.0)
        errs = []
        for dz in (0.6676 / 2000, 0.6676 / 8000):
            tb_bare = evolve_bare(bare0, big, drive, 0.6676, dz=dz,
                                  boundary=Boundary.HARD_WALL)
            tb_gauged = evolve_gauged(packet_g, big, drive, 0.6676, dz=dz,
                                      boundary=Boundary.HARD_WALL)
            mapped = gauge_transform(tb_bare.final, drive, Gauge.GAUGED)
            errs.append(np.max(np.abs(mapped.amplitudes
                                      - tb_gauged.final.amplitudes)))
        assert errs[1] < errs[0] / 3  # shrinks at least linearly with dz


class TestTwoLevelReduction:
    @pytest.mark.parametrize("drive_fixture,z_cycles", [
        ("resonant_drive", 10),
        ("single_cycle_b", 1),
    ])
    def test_plane_wave_occupations_match(self, params, request, drive_fixture,
                                          z_cycles):
        drive = request.getfixturevalue(drive_fixture)
        q = params.q_from_qa(np.pi / 4)
        state = bloch_mode_state(q, Branch.MINUS, params)
        z_end = z_cycles * drive.period_cm
        traj = evolve_gauged(state, params, drive, z_end,
                             snapshot_every=200)
        p_lattice = lattice_transition_probability(traj, params)
        ref = tl_evolve(ground_state(q, params), drive, params,
                        z_end=z_end, snapshot_every=200)
        assert traj.z == pytest.approx(ref.z, abs=1e-12)
        assert np.max(np.abs(p_lattice - ref.transition_probability)) < 1e-6

    def test_bare_packet_matches_two_level_per_q(self, params):
        # bare-gauge wave packet against the plane-wave reduction, resolved
        # at the packet's central momentum
        drive = DriveProfile.from_phase_amplitude("sinusoidal", 0.4, 2.8556)
        big = SuperlatticeParams(2.0, 1.817, n_sites=256)
        q0 = big.q_from_qa(np.pi / 4)
        from bentlattice.tight_binding import ModeVector
        packet = gaussian_packet_state(q0, 25.0, big, center_site=0.0)
        bare0 = ModeVector(packet.amplitudes.copy(), Gauge.BARE, 0.0)
        # two cycles keep the packet tails ~1e-9 at the hard walls, which
        # the 1e-6 comparison needs
        z_end = 2 * drive.period_cm
        dz = drive.period_cm / 16000
        traj = evolve_bare(bare0, big, drive, z_end, dz=dz,
                           boundary=Boundary.HARD_WALL)
        mapped = gauge_transform(traj.final, drive, Gauge.GAUGED)
        qa_values, p_q, weights = lattice_transition_probability(
            mapped, big, q_resolved=True)
        i0 = np.argmax(weights)
        assert qa_values[i0] == pytest.approx(np.pi / 4, abs=1e-12)
        ref = tl_evolve(ground_state(qa_values[i0] / big.spacing_cm, big),
                        drive, big, z_end=z_end, dz=dz, snapshot_every=10**9)
        assert p_q[i0] == pytest.approx(ref.transition_probability[-1],
                                        abs=1e-6)


class TestPacketTransport:
    def test_centroid_moves_at_group_velocity(self, params):
        big = SuperlatticeParams(2.0, 1.817, n_sites=256)
        q = big.q_from_qa(np.pi / 4)
        packet = gaussian_packet_state(q, 20.0, big, center_site=-40.0)
        straight = DriveProfile.straight()
        z_end = 6.0
        traj = evolve_gauged(packet, big, straight, z_end, dz=0.002,
                             boundary=Boundary.PERIODIC)
        sites = big.sites
        w0 = np.abs(traj.states[0]) ** 2
        w1 = np.abs(traj.states[-1]) ** 2
        drift_sites = (np.sum(sites * w1) / np.sum(w1)
                       - np.sum(sites * w0) / np.sum(w0))
        measured = drift_sites * big.spacing_cm / z_end
        # independent finite-difference group-velocity oracle
        h = 1e-6
        fd = (dispersion(q + h, big)[0] - dispersion(q - h, big)[0]) / (2 * h)
        assert measured == pytest.approx(fd, rel=0.02)


class TestValidation:
    def test_odd_sites_rejected(self):
        with pytest.raises(ParameterError):
            SuperlatticeParams(2.0, 1.817, n_sites=65)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ParameterError):
            SuperlatticeParams(-2.0, 1.817)

    def test_wrong_gauge_rejected(self, params, resonant_drive):
        state = bloch_mode_state(params.q_from_qa(np.pi / 4), Branch.MINUS,
                                 params, Gauge.BARE)
        with pytest.raises(ParameterError):
            evolve_gauged(state, params, resonant_drive, z_end=1.0)

    def test_bare_periodic_with_bend_rejected(self, params, resonant_drive):
        state = bloch_mode_state(params.q_from_qa(np.pi / 4), Branch.MINUS,
                                 params, Gauge.BARE)
        with pytest.raises(ParameterError):
            evolve_bare(state, params, resonant_drive, z_end=1.0,
                        boundary=Boundary.PERIODIC)

    def test_group_velocity_signs(self, params, q_quarter):
        assert group_velocity(q_quarter, params, Branch.MINUS) > 0
        assert group_velocity(q_quarter, params, Branch.PLUS) < 0


class TestEdgeDiagnostic:
    def test_interior_packet_reports_tiny_edge_power(self, params):
        big = SuperlatticeParams(2.0, 1.817, n_sites=128)
        packet = gaussian_packet_state(big.q_from_qa(np.pi / 4), 8.0, big)
        traj = evolve_gauged(packet, big, DriveProfile.straight(), 0.5,
                             dz=0.001, boundary=Boundary.HARD_WALL)
        assert traj.edge_power_fraction() < 1e-6
