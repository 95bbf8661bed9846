import numpy as np
import pytest

from bentlattice import DriveProfile, SuperlatticeParams


@pytest.fixture
def params():
    """Lattice constants used throughout the validation scenarios."""
    return SuperlatticeParams(sigma_cm=2.0, delta_cm=1.817, spacing_um=10.0,
                              n_sites=64)


@pytest.fixture
def q_quarter(params):
    """Wavenumber with qa = pi/4 (half the zone-edge value)."""
    return params.q_from_qa(np.pi / 4)


@pytest.fixture
def resonant_drive():
    """Sinusoidal drive at the 3-quantum resonance of the standard lattice."""
    return DriveProfile.from_phase_amplitude("sinusoidal", 0.4, 2.8556)


@pytest.fixture
def detuned_drive():
    """Same drive with the period shortened 5% off resonance."""
    return DriveProfile.from_phase_amplitude("sinusoidal", 0.4, 2.7196)


@pytest.fixture
def single_cycle_b():
    """Single-cycle drive at amplitude 6 (the partial-transition point)."""
    return DriveProfile.from_phase_amplitude("single_cycle", 6.0, 0.6676)
