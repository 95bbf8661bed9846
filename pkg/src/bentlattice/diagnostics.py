"""Observable extraction: band populations, transition probability, packets.

Continuum band projections require the transverse window to span a whole
number of lattice cells; every window momentum then folds onto exactly one
Brillouin-zone representative and the Bloch modes of the window form an
orthonormal set, which makes the projections exactly power-complete.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import drive as drv
from .bands import BandStructure, grid_q_values, plane_wave_bands
from .bpm import FieldGrid, OpticsParams, TransverseGrid
from .errors import ParameterError, ShapeError
from .tight_binding import (Branch, Gauge, LatticeTrajectory, ModeVector,
                            SuperlatticeParams, bloch_eigenvector,
                            gauge_transform)

CM_PER_UM = 1.0e-4


# ---------------------------------------------------------------------------
# continuum band projections
# ---------------------------------------------------------------------------

def bands_for_grid(optics: OpticsParams, grid: TransverseGrid,
                   n_plane_waves: int = 81, n_bands: int = 4) -> BandStructure:
    """Band structure evaluated exactly at the grid's folded momentum comb."""
    q_values = grid_q_values(optics, grid.width_um * CM_PER_UM)
    return plane_wave_bands(optics, n_plane_waves=n_plane_waves,
                            n_bands=n_bands, q_values=q_values)


def _check_projection_setup(fieldgrid: FieldGrid, bands: BandStructure):
    window_cm = fieldgrid.grid.width_um * CM_PER_UM
    a_cm = bands.optics.spacing_um * CM_PER_UM
    n_classes = window_cm / (2 * a_cm)
    if abs(n_classes - round(n_classes)) > 1e-9:
        raise ShapeError("grid window is not a whole number of lattice cells")
    n_classes = int(round(n_classes))
    if len(bands.q_values) != n_classes:
        raise ShapeError("band structure was not built for this grid "
                         "(use bands_for_grid)")
    return n_classes


def band_amplitudes(fieldgrid: FieldGrid, bands: BandStructure):
    """Complex overlap amplitudes with every Bloch mode of the window.

    Returns an (n_q, n_bands) array; |amps|^2 sums to the power carried by
    the projected bands (unit-power fields give fractions directly).
    """
    n_q = _check_projection_setup(fieldgrid, bands)
    grid = fieldgrid.grid
    window_cm = grid.width_um * CM_PER_UM
    dk = 2 * np.pi / window_cm
    k_all = grid.k_cm
    # continuum Fourier transform with the grid's true origin
    ehat = (np.fft.fft(fieldgrid.envelope) * grid.dx_um * CM_PER_UM
            * np.exp(-1j * k_all * grid.x_min_um * CM_PER_UM))
    nyquist = np.pi / (grid.dx_um * CM_PER_UM)
    g = bands.g_values
    amps = np.empty((n_q, bands.n_bands), dtype=complex)
    for iq, q in enumerate(bands.q_values):
        ks = q + g
        bins = np.round(ks / dk).astype(int)
        usable = np.abs(ks) < 0.999 * nyquist
        spectrum = np.where(usable, ehat[bins % grid.n], 0.0)
        amps[iq] = (bands.coeffs[iq].conj().T @ spectrum) / np.sqrt(window_cm)
    return amps


def band_populations(fieldgrid: FieldGrid, bands: BandStructure,
                     n_bands: int = 2) -> np.ndarray:
    """Power fractions carried by the lowest bands (remainder = 1 - sum)."""
    amps = band_amplitudes(fieldgrid, bands)
    power_cm = fieldgrid.power * CM_PER_UM
    fractions = np.sum(np.abs(amps) ** 2, axis=0) / power_cm
    return fractions[:n_bands]


def miniband_transition_fraction(fieldgrid: FieldGrid,
                                 bands: BandStructure) -> float:
    """Upper-miniband share of the two-miniband power, the continuum P."""
    b1, b2 = band_populations(fieldgrid, bands, n_bands=2)
    return float(b2 / (b1 + b2))


def project_onto_band(fieldgrid: FieldGrid, bands: BandStructure,
                      band: int = 0) -> FieldGrid:
    """Component of the field in one band, renormalised to unit power.

    Used to prepare launch states that are pure superpositions of
    lowest-miniband Bloch modes.
    """
    amps = band_amplitudes(fieldgrid, bands)
    grid = fieldgrid.grid
    window_cm = grid.width_um * CM_PER_UM
    x_cm = grid.x_cm
    out = np.zeros(grid.n, dtype=complex)
    g = bands.g_values
    nyquist = np.pi / (grid.dx_um * CM_PER_UM)
    for iq, q in enumerate(bands.q_values):
        if abs(amps[iq, band]) < 1e-300:
            continue
        ks = q + g
        usable = np.abs(ks) < 0.999 * nyquist
        coeff = np.where(usable, bands.coeffs[iq, :, band], 0.0)
        out += amps[iq, band] * (np.exp(1j * np.outer(x_cm, ks)) @ coeff)
    out /= np.sqrt(window_cm)
    return FieldGrid(out, grid, fieldgrid.z).normalized()


# ---------------------------------------------------------------------------
# lattice projections
# ---------------------------------------------------------------------------

def _sublattice_spectra(amplitudes, params):
    """Per-q sublattice amplitudes (s1, s2) from even/odd site transforms."""
    n = params.n_sites
    l = params.sites
    even, odd = amplitudes[0::2], amplitudes[1::2]
    l_even, l_odd = l[0::2], l[1::2]
    qa_values = 2 * np.pi * np.arange(n // 2) / n
    qa_values = np.where(qa_values > np.pi / 2, qa_values - np.pi, qa_values)
    # unitary transforms: summed |s1|^2 + |s2|^2 equals the site power
    scale = 1.0 / np.sqrt(n // 2)
    phase_e = scale * np.exp(-1j * np.outer(qa_values, l_even))
    phase_o = scale * np.exp(-1j * np.outer(qa_values, l_odd))
    return qa_values, phase_e @ even, phase_o @ odd


def lattice_band_amplitudes(state: ModeVector, params: SuperlatticeParams):
    """Per-q occupation amplitudes (r_minus, r_plus) of a gauged state."""
    if state.gauge is not Gauge.GAUGED:
        raise ParameterError("lattice projections need gauged amplitudes "
                             "(gauge_transform first)")
    qa_values, s1, s2 = _sublattice_spectra(state.amplitudes, params)
    r_minus = np.empty_like(s1)
    r_plus = np.empty_like(s1)
    for i, qa in enumerate(qa_values):
        q = qa / params.spacing_cm
        vm = bloch_eigenvector(q, Branch.MINUS, params)
        vp = bloch_eigenvector(q, Branch.PLUS, params)
        r_minus[i] = vm[0] * s1[i] + vm[1] * s2[i]
        r_plus[i] = vp[0] * s1[i] + vp[1] * s2[i]
    return qa_values, r_minus, r_plus


def lattice_transition_probability(source, params: SuperlatticeParams,
                                   profile: drv.DriveProfile = None,
                                   q_resolved: bool = False):
    """Upper-branch power fraction of a lattice state or trajectory.

    Bare-gauge input is gauge-transformed first (requires the drive).  With
    q_resolved the per-momentum fractions P(q) = |r+|^2/(|r-|^2 + |r+|^2)
    are returned together with the per-momentum weights.
    """
    if isinstance(source, LatticeTrajectory):
        values = []
        for i in range(len(source.z)):
            state = ModeVector(source.states[i], source.gauge, float(source.z[i]))
            values.append(lattice_transition_probability(
                state, params, profile, q_resolved=False))
        return np.array(values)
    state = source
    if state.gauge is Gauge.BARE:
        if profile is None:
            raise ParameterError("bare-gauge input needs the drive profile")
        state = gauge_transform(state, profile, Gauge.GAUGED)
    qa_values, r_minus, r_plus = lattice_band_amplitudes(state, params)
    pm = np.abs(r_minus) ** 2
    pp = np.abs(r_plus) ** 2
    if q_resolved:
        weights = pm + pp
        with np.errstate(invalid="ignore", divide="ignore"):
            pq = np.where(weights > 0, pp / weights, 0.0)
        return qa_values, pq, weights / weights.sum()
    return float(pp.sum() / (pm.sum() + pp.sum()))


# ---------------------------------------------------------------------------
# packet census and moments
# ---------------------------------------------------------------------------

def centroid(x, intensity) -> float:
    x = np.asarray(x, dtype=float)
    w = np.asarray(intensity, dtype=float)
    return float(np.sum(x * w) / np.sum(w))


def second_moment(x, intensity) -> float:
    x = np.asarray(x, dtype=float)
    w = np.asarray(intensity, dtype=float)
    mean = np.sum(x * w) / np.sum(w)
    return float(np.sum((x - mean) ** 2 * w) / np.sum(w))


@dataclass
class Packet:
    center: float
    power: float
    fraction: float
    velocity: float = None  # filled by track_packets


def packet_census(x, intensity, threshold: float = 0.1,
                  merge_radius: float = 20.0, min_points: int = 3):
    """Segment an intensity profile into packets above threshold * peak.

    Adjacent segments closer than merge_radius are merged (waveguide-scale
    substructure would otherwise fragment a single envelope).  Powers use
    the grid measure dx; fractions are relative to the total profile power.
    """
    if not (0.0 < threshold < 1.0):
        raise ParameterError("threshold must be in (0, 1)")
    x = np.asarray(x, dtype=float)
    w = np.asarray(intensity, dtype=float)
    peak = w.max(initial=0.0)
    if peak <= 0:
        return []
    dx = float(x[1] - x[0])
    above = np.where(w > threshold * peak)[0]
    if above.size == 0:
        return []
    breaks = np.where(np.diff(above) > 1)[0]
    segments = np.split(above, breaks + 1)
    merged = [list(segments[0])]
    for seg in segments[1:]:
        if (x[seg[0]] - x[merged[-1][-1]]) < merge_radius:
            merged[-1].extend(seg)
        else:
            merged.append(list(seg))
    total = float(np.sum(w) * dx)
    packets = []
    for seg in merged:
        if len(seg) < min_points:
            continue
        idx = np.arange(seg[0], seg[-1] + 1)
        power = float(np.sum(w[idx]) * dx)
        packets.append(Packet(centroid(x[idx], w[idx]), power, power / total))
    packets.sort(key=lambda p: p.center)
    return packets


def track_packets(z_values, x, intensities, threshold: float = 0.1,
                  merge_radius: float = 20.0, n_fit: int = 5,
                  max_jump: float = 40.0):
    """Census of the final snapshot with velocities from the trailing snapshots.

    Each final packet is traced backwards by nearest-centre matching over
    the last n_fit snapshots and its velocity estimated as the least-squares
    slope of centre versus z, which is robust to breathing oscillations.
    """
    final = packet_census(x, intensities[-1], threshold, merge_radius)
    n_avail = min(n_fit, len(z_values))
    history = [packet_census(x, intensities[i], threshold, merge_radius)
               for i in range(len(z_values) - n_avail, len(z_values))]
    z_used = np.asarray(z_values[len(z_values) - n_avail:], dtype=float)
    for packet in final:
        zs, cs = [], []
        ref = packet.center
        for zi, census in zip(z_used[::-1], history[::-1]):
            if not census:
                continue
            nearest = min(census, key=lambda p: abs(p.center - ref))
            if abs(nearest.center - ref) > max_jump:
                continue
            zs.append(zi)
            cs.append(nearest.center)
            ref = nearest.center
        if len(zs) >= 2:
            slope = np.polyfit(zs, cs, 1)[0]
            packet.velocity = float(slope)
    return final


@dataclass
class Observables:
    """Per-snapshot summary row for the observables CSV."""

    z: float
    band_power: tuple
    remainder: float
    centroid_x: float
    second_moment: float
    packet_count: int
    packets: list = field(default_factory=list)


def observables_series(traj, bands: BandStructure = None,
                       threshold: float = 0.1, merge_radius: float = None,
                       n_fit: int = 5):
    """Observables for every snapshot of a BPM trajectory."""
    grid = traj.grid
    if merge_radius is None:
        merge_radius = 2 * bands.optics.spacing_um if bands is not None else 20.0
    x = grid.x_um
    out = []
    intensities = np.abs(traj.fields) ** 2
    powers = traj.power()
    p_launch = powers[0]
    for i, z in enumerate(traj.z):
        if bands is not None:
            fg = traj.field_at(i)
            # fractions of the launch power, so the remainder column also
            # accounts for what the absorber removed
            pops = band_populations(fg, bands, n_bands=2) * (powers[i] / p_launch)
            remainder = max(0.0, 1.0 - float(np.sum(pops)))
            band_power = tuple(float(p) for p in pops)
        else:
            band_power = ()
            remainder = 0.0
        if i == len(traj.z) - 1:
            packets = track_packets(traj.z, x, intensities, threshold,
                                    merge_radius, n_fit)
        else:
            packets = packet_census(x, intensities[i], threshold, merge_radius)
        out.append(Observables(
            z=float(z),
            band_power=band_power,
            remainder=remainder,
            centroid_x=centroid(x, intensities[i]),
            second_moment=second_moment(x, intensities[i]),
            packet_count=len(packets),
            packets=packets,
        ))
    return out
