import warnings

import numpy as np
import pytest

from bentlattice import CalibrationError, OpticsParams, ParameterError
from bentlattice.bands import (BandStructure, calibrate_channel,
                               default_q_values, fit_tight_binding,
                               grid_q_values, plane_wave_bands,
                               _potential_matrix)

CM_PER_UM = 1e-4


@pytest.fixture(scope="module")
def calibrated_bands():
    return plane_wave_bands(OpticsParams(), n_plane_waves=81, n_q=64,
                            n_bands=4)


class TestAssembly:
    def test_potential_matrix_hermitian(self):
        g = np.arange(-40, 41)
        v = _potential_matrix(OpticsParams(), g)
        assert np.max(np.abs(v - v.conj().T)) < 1e-12

    def test_even_truncation_rejected(self):
        with pytest.raises(ParameterError):
            plane_wave_bands(OpticsParams(), n_plane_waves=80)
        with pytest.raises(ParameterError):
            plane_wave_bands(OpticsParams(), n_plane_waves=31)

    def test_truncation_is_converged_at_default(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            plane_wave_bands(OpticsParams(), n_plane_waves=81, n_q=8,
                             n_bands=2, check_truncation=True)


class TestFreeSpaceLimit:
    def test_folded_parabola(self):
        optics = OpticsParams(dn1=1e-12, dn2=1e-12)
        n_q = 16
        bands = plane_wave_bands(optics, n_plane_waves=41, n_q=n_q, n_bands=4)
        a_cm = optics.spacing_um * CM_PER_UM
        diffraction = optics.wavelength_cm / (4 * np.pi * optics.n_s)
        for iq, q in enumerate(bands.q_values):
            g = np.arange(-3, 4) * np.pi / a_cm
            free = np.sort(diffraction * (q + g) ** 2)[:4]
            assert np.allclose(bands.omega[:, iq], free, rtol=1e-9,
                               atol=1e-6)


class TestSpectralProperties:
    def test_gap_at_zone_edge(self, calibrated_bands):
        s = calibrated_bands.half_splitting()
        edge = np.argmin(np.abs(np.abs(calibrated_bands.q_values)
                                - np.pi / (2 * 10.0 * CM_PER_UM)))
        assert s.min() > 1.5           # open gap
        assert np.argmin(s) == edge    # narrowest at the zone edge

    def test_band_symmetry_in_q(self):
        optics = OpticsParams()
        qs = np.array([-1.0, -0.4, 0.4, 1.0]) / (2 * 10.0 * CM_PER_UM) * np.pi
        bands = plane_wave_bands(optics, n_plane_waves=61, q_values=qs,
                                 n_bands=3)
        assert np.max(np.abs(bands.omega[:, 0] - bands.omega[:, 3])) < 1e-10
        assert np.max(np.abs(bands.omega[:, 1] - bands.omega[:, 2])) < 1e-10

    def test_modes_orthonormal(self, calibrated_bands):
        c = calibrated_bands.coeffs[5]
        gram = c.conj().T @ c
        assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < 1e-10

    def test_periodic_part_is_periodic(self, calibrated_bands):
        x, u = calibrated_bands.periodic_part(3, 0, n_samples=128)
        # continuing the Fourier series one full cell ahead reproduces it
        phases = np.exp(1j * np.outer((x + 20.0) * CM_PER_UM,
                                      calibrated_bands.g_values))
        u_shift = phases @ calibrated_bands.coeffs[3, :, 0]
        assert np.max(np.abs(u_shift - u)) < 1e-10


class TestFit:
    def test_synthetic_self_consistency(self):
        optics = OpticsParams()
        a_cm = optics.spacing_um * CM_PER_UM
        qs = default_q_values(optics, 64)
        sigma, delta = 2.0, 1.817
        split = np.sqrt(delta**2 + 4 * sigma**2 * np.cos(qs * a_cm) ** 2)
        omega = np.stack([-split, split])
        synthetic = BandStructure(qs, omega, np.zeros((64, 1, 2), complex),
                                  np.array([0]), optics)
        fit = fit_tight_binding(synthetic)
        assert fit.sigma_cm == pytest.approx(sigma, abs=1e-10)
        assert fit.delta_cm == pytest.approx(delta, abs=1e-10)
        assert fit.rms_residual < 1e-12

    def test_calibrated_geometry_hits_targets(self, calibrated_bands):
        fit = fit_tight_binding(calibrated_bands)
        assert fit.sigma_cm == pytest.approx(2.0, rel=0.02)
        assert fit.delta_cm == pytest.approx(1.817, rel=0.02)

    def test_delta_matches_edge_gap_within_fit_tolerance(self, calibrated_bands):
        fit = fit_tight_binding(calibrated_bands)
        edge_half_gap = calibrated_bands.half_splitting().min()
        assert abs(fit.delta_cm - edge_half_gap) < 0.02

    def test_single_band_rejected(self):
        optics = OpticsParams()
        qs = default_q_values(optics, 8)
        lone = BandStructure(qs, np.zeros((1, 8)), np.zeros((8, 1, 1), complex),
                             np.array([0]), optics)
        with pytest.raises(ParameterError):
            fit_tight_binding(lone)


class TestGridQValues:
    def test_folding_covers_zone(self):
        optics = OpticsParams()
        qs = grid_q_values(optics, 82 * 2 * 10.0 * CM_PER_UM)
        edge = np.pi / (2 * 10.0 * CM_PER_UM)
        assert len(qs) == 82
        assert np.all(qs > -edge - 1e-9)
        assert np.all(qs <= edge + 1e-9)
        assert len(np.unique(np.round(qs, 6))) == 82

    def test_incommensurate_window_rejected(self):
        with pytest.raises(ParameterError):
            grid_q_values(OpticsParams(), 8.3e-2)


class TestCalibration:
    def test_fixed_point_returns_same_geometry(self):
        # asking for the constants the shipped geometry already produces
        # must leave the geometry essentially untouched
        optics = OpticsParams()
        bands = plane_wave_bands(optics, n_plane_waves=81, n_q=64, n_bands=2)
        fit = fit_tight_binding(bands)
        result = calibrate_channel(fit.sigma_cm, fit.delta_cm, optics)
        assert result.optics.channel_width_um == pytest.approx(
            optics.channel_width_um, abs=5e-3)
        assert result.optics.dn2 == pytest.approx(optics.dn2, rel=5e-4)

    def test_sigma_monotone_over_bracket(self):
        optics = OpticsParams()
        result = calibrate_channel(2.0, 1.817, optics)
        samples = np.array(result.sigma_samples)
        assert np.all(np.diff(samples) > 0)

    def test_unreachable_target_raises(self):
        with pytest.raises(CalibrationError):
            calibrate_channel(30.0, 1.817, OpticsParams())
