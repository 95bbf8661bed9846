import numpy as np
import pytest

from bentlattice import (Branch, DomainError, DriveProfile, Gauge,
                         ParameterError, ShapeError, SuperlatticeParams)
from bentlattice.dirac import (SpinorField, XiGrid, band_weights, branch_spinor,
                               dirac_evolve, free_dispersion,
                               gaussian_spinor_packet, lattice_from_spinor,
                               spinor_from_lattice)
from bentlattice.diagnostics import packet_census
from bentlattice.tight_binding import (bloch_mode_state, dispersion,
                                       evolve_gauged, gaussian_packet_state)
from bentlattice.two_level import (MatrixKind, transition_probability,
                                   zone_edge_k)


class TestFreeDispersion:
    def test_rest_energy(self, params):
        lo, hi = free_dispersion(0.0, params)
        assert hi == pytest.approx(params.delta_cm, rel=1e-15)
        assert lo == -hi

    def test_unit_momentum_value(self, params):
        lo, hi = free_dispersion(1.0, params)
        assert hi == pytest.approx(2.702126754983933, rel=1e-12)

    def test_matches_lattice_near_zone_edge(self, params):
        # agreement with the miniband dispersion is cubic or better in k
        def gap(k):
            q = (np.pi + k) / (2 * params.spacing_cm)
            lattice = dispersion(q, params)[1]
            return abs(lattice - free_dispersion(k, params)[1])

        assert gap(0.2) < 2e-4
        assert gap(0.1) < gap(0.2) / 7  # cubic-or-better decay


class TestBranchSpinors:
    @pytest.mark.parametrize("k", [-np.pi / 2, -0.3, 0.0, 0.8, 2.0])
    def test_orthonormal_eigenpairs(self, params, k):
        h = np.array([[params.delta_cm, params.sigma_cm * k],
                      [params.sigma_cm * k, -params.delta_cm]])
        um = branch_spinor(k, Branch.MINUS, params)
        up = branch_spinor(k, Branch.PLUS, params)
        lo, hi = free_dispersion(k, params)
        assert np.linalg.norm(h @ um - lo * um) < 1e-12
        assert np.linalg.norm(h @ up - hi * up) < 1e-12
        assert abs(np.dot(um, up)) < 1e-14
        assert np.linalg.norm(um) == pytest.approx(1.0, abs=1e-14)


class TestFreeEvolution:
    def test_negative_branch_eigenphase(self, params):
        grid = XiGrid.centered(64.0, 512)
        k = float(grid.k[17])
        um = branch_spinor(k, Branch.MINUS, params)
        plane = np.exp(1j * k * np.arange(grid.n) * grid.dxi)
        field = SpinorField((um[0] * plane).astype(complex),
                            (um[1] * plane).astype(complex), grid, 0.0)
        z_end = 0.5
        traj = dirac_evolve(field, DriveProfile.straight(), params,
                            z_end=z_end, dz=1e-4, edge_tol=2.0)
        expected = np.exp(1j * free_dispersion(k, params)[1] * z_end)
        ratio = traj.psi1[-1] / field.psi1
        assert np.max(np.abs(ratio - expected)) < 1e-7

    def test_massless_chiral_transport(self):
        massless = SuperlatticeParams(2.0, 0.0, 10.0, 64)
        grid = XiGrid.centered(128.0, 1024)
        xi = grid.xi
        # alpha eigenvector (1, 1)/sqrt(2) translates at +sigma
        env = np.exp(-((xi + 20.0) / 6.0) ** 2).astype(complex)
        field = SpinorField(env / np.sqrt(2), env / np.sqrt(2), grid, 0.0)
        z_end = 3.0
        traj = dirac_evolve(field, DriveProfile.straight(), massless,
                            z_end=z_end, dz=5e-4)
        final = traj.final
        num = np.sum(xi * final.density)
        assert num / np.sum(final.density) == pytest.approx(
            -20.0 + massless.sigma_cm * z_end, abs=1e-3)

    def test_norm_conserved(self, params, single_cycle_b):
        grid = XiGrid.centered(256.0, 2048)
        field = gaussian_spinor_packet(grid, -np.pi / 2, 16.0, params)
        traj = dirac_evolve(field, single_cycle_b, params, z_end=0.6676,
                            snapshot_every=250)
        norms = traj.norms()
        assert np.max(np.abs(norms / norms[0] - 1.0)) < 1e-9


class TestPackets:
    def test_initial_packet_is_pure(self, params):
        grid = XiGrid.centered(256.0, 2048)
        field = gaussian_spinor_packet(grid, -np.pi / 2, 16.0, params)
        wm, wp = band_weights(field, params)
        assert wm > 1.0 - 1e-6
        assert field.norm == pytest.approx(1.0, rel=1e-12)

    def test_point_b_split_matches_two_level(self, params):
        # the spinor packet must reproduce its own plane-wave reduction and
        # break into two counter-moving packets once the halves separate
        lam = 0.6676
        drive = DriveProfile.single_cycle(45.0, lam)
        grid = XiGrid.centered(256.0, 2048)
        q = params.q_from_qa(np.pi / 4)
        k0 = zone_edge_k(q, params)
        field = gaussian_spinor_packet(grid, k0, 8.0, params)
        traj = dirac_evolve(field, drive, params, z_end=10.0, dz=lam / 2000,
                            snapshot_every=2000)
        wm, wp = band_weights(traj.final, params)
        p_plane = transition_probability(drive, params, q, MatrixKind.DIRAC)
        assert wp == pytest.approx(p_plane, abs=0.05)
        assert wp == pytest.approx(0.45, abs=0.05)
        packets = packet_census(grid.xi, traj.final.density, threshold=0.1,
                                merge_radius=4.0)
        assert len(packets) == 2
        centers = sorted(p.center for p in packets)
        assert centers[0] < -4 and centers[1] > 4

    def test_edge_overflow_raises(self, params):
        grid = XiGrid.centered(24.0, 256)
        field = gaussian_spinor_packet(grid, -np.pi / 2, 6.0, params)
        with pytest.raises(DomainError):
            dirac_evolve(field, DriveProfile.straight(), params, z_end=8.0,
                         dz=1e-3, snapshot_every=200)


class TestLatticeMap:
    def test_round_trip_identity(self, params):
        state = gaussian_packet_state(params.q_from_qa(np.pi / 4), 8.0, params)
        spinor = spinor_from_lattice(state, params)
        back = lattice_from_spinor(spinor, params)
        assert np.max(np.abs(back.amplitudes - state.amplitudes)) == 0.0
        assert back.gauge is Gauge.GAUGED

    def test_power_preserved(self, params):
        state = gaussian_packet_state(params.q_from_qa(0.35 * np.pi), 6.0,
                                      params)
        spinor = spinor_from_lattice(state, params)
        assert spinor.norm == pytest.approx(state.power, rel=1e-14)

    def test_bloch_mode_maps_to_plane_wave(self, params):
        qa = np.pi / 2 + 0.125 * np.pi  # within the zone-edge neighbourhood
        n = params.n_sites
        state = bloch_mode_state(qa / params.spacing_cm, Branch.MINUS, params)
        spinor = spinor_from_lattice(state, params)
        k_expected = 2 * qa - np.pi
        spec1 = np.abs(np.fft.fft(spinor.psi1)) ** 2
        spec2 = np.abs(np.fft.fft(spinor.psi2)) ** 2
        k_grid = spinor.grid.k
        i1 = np.argmax(spec1 + spec2)
        assert k_grid[i1] == pytest.approx(k_expected, abs=1e-12)
        total = np.sum(spec1 + spec2)
        assert (spec1[i1] + spec2[i1]) / total > 1.0 - 1e-10

    def test_bare_gauge_rejected(self, params):
        state = bloch_mode_state(params.q_from_qa(np.pi / 4), Branch.MINUS,
                                 params, Gauge.BARE)
        with pytest.raises(ParameterError):
            spinor_from_lattice(state, params)

    def test_partial_cell_count_rejected(self):
        bad = SuperlatticeParams(2.0, 1.817, n_sites=6)
        state = bloch_mode_state(bad.q_from_qa(np.pi / 3), Branch.MINUS, bad)
        with pytest.raises(ShapeError):
            spinor_from_lattice(state, bad)


class TestTierAgreementInValidityRegime:
    def test_small_drive_near_zone_edge(self, params):
        # weak drive and small momentum: here the continuum reduction of the
        # lattice holds and the two tiers must land on the same populations
        lam = 0.6676
        drive = DriveProfile.from_phase_amplitude("single_cycle", 0.3, lam)
        qa = 0.45 * np.pi
        lattice = SuperlatticeParams(2.0, 1.817, 10.0, 256)
        q = lattice.q_from_qa(qa)
        packet = gaussian_packet_state(q, 32.0, lattice)
        tb_traj = evolve_gauged(packet, lattice, drive, z_end=lam,
                                dz=lam / 4000)
        mapped = spinor_from_lattice(tb_traj.final, lattice)
        wp_lattice = band_weights(mapped, lattice)[1]

        grid = XiGrid.centered(float(lattice.n_sites // 2), lattice.n_sites)
        k0 = zone_edge_k(q, lattice)
        spinor0 = gaussian_spinor_packet(grid, k0, 16.0, lattice)
        d_traj = dirac_evolve(spinor0, drive, lattice, z_end=lam,
                              dz=lam / 4000)
        wp_dirac = band_weights(d_traj.final, lattice)[1]
        assert wp_lattice == pytest.approx(wp_dirac, abs=0.02)
        assert wp_dirac > 1e-4  # the drive does move population
