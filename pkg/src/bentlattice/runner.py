"""Scenario execution: tier dispatch, output files, manifest, sweeps.

Every run resolves its configuration first, executes deterministically
(fixed steps, no RNG anywhere), writes its outputs plus a canonical
``resolved.cfg`` and a ``manifest.json`` with SHA-256 checksums, and leaves
re-runs bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing
import os
from importlib.metadata import version as pkg_version

import numpy as np

from . import bands as bands_mod
from . import bpm as bpm_mod
from . import diagnostics as diag
from . import dirac as dirac_mod
from . import drive as drv
from . import tight_binding as tb
from . import two_level as tl
from .config import SCHEMA, Scenario, canonical_dump, resolve
from .errors import AccuracyError, BentLatticeError, ConfigError
from .fieldio import write_csv, write_field_dump

CM_PER_UM = 1.0e-4


def _q_from_scenario(scn: Scenario, spacing_cm):
    return scn.section("input")["qa_over_pi"] * np.pi / spacing_cm


def _self_check(summary, label, coarse, fine, tol):
    delta = float(np.max(np.abs(np.asarray(coarse) - np.asarray(fine))))
    summary[f"self_check_{label}"] = delta
    if delta > tol:
        raise AccuracyError(
            f"step-halving self-check failed: {label} moved by {delta:.2e} "
            f"(> {tol:.0e}); decrease dz")


# ---------------------------------------------------------------------------
# tier runners: each returns (files, summary); files maps name -> writer
# ---------------------------------------------------------------------------

def _run_two_level(scn: Scenario, out_dir):
    params = scn.lattice_params()
    profile = scn.drive_profile()
    q = _q_from_scenario(scn, params.spacing_cm)
    num = scn.section("numerics")
    z_end = num["z_end_cm"]
    dz = num.get("dz_cm")
    branch = scn.branch()
    state = (tl.ground_state(q, params) if branch is tb.Branch.MINUS
             else tl.TwoLevelState(0j, 1.0 + 0j, 0.0, q))
    kind = scn.matrix_kind()
    snap = num.get("snapshot_every")
    if snap is None:
        n_steps = max(1, int(round(z_end / (dz or profile.period_cm / 2000))))
        snap = max(1, n_steps // 4000)
    traj = tl.evolve(state, profile, params, kind, z_end=z_end, dz=dz,
                     snapshot_every=snap)
    p = traj.transition_probability
    summary = {
        "P_final": float(p[-1]),
        "P_max": float(p.max()),
        "z_at_P_max": float(traj.z[np.argmax(p)]),
        "norm_error": float(np.max(np.abs(traj.norm - 1.0))),
        "phi0": drv.phase_amplitude(profile),
    }
    if num.get("self_check"):
        half = tl.evolve(state, profile, params, kind, z_end=z_end,
                         dz=(dz or profile.period_cm / 2000) / 2,
                         snapshot_every=10**9)
        _self_check(summary, "P_final", p[-1],
                    half.transition_probability[-1], 1e-6)
    files = {}
    if out_dir is not None:
        name = f"{scn.prefix}_trajectory.csv"
        rows = [(z, pp, r[0].real, r[0].imag, r[1].real, r[1].imag)
                for z, pp, r in zip(traj.z, p, traj.r)]
        write_csv(os.path.join(out_dir, name),
                  ["z_cm", "P", "re_rm", "im_rm", "re_rp", "im_rp"], rows)
        files[name] = None
    return files, summary


def _lattice_input_state(scn: Scenario, params, gauge):
    inp = scn.section("input")
    q = _q_from_scenario(scn, params.spacing_cm)
    branch = scn.branch()
    if inp["packet"] == "bloch":
        return tb.bloch_mode_state(q, branch, params, gauge)
    return tb.gaussian_packet_state(q, inp["width_sites"], params, branch,
                                    center_site=inp["center_site"], gauge=gauge)


def _run_tight_binding(scn: Scenario, out_dir):
    params = scn.lattice_params()
    profile = scn.drive_profile()
    num = scn.section("numerics")
    gauge = scn.gauge()
    boundary = scn.boundary()
    state = _lattice_input_state(scn, params, gauge)
    z_end = num["z_end_cm"]
    dz = num.get("dz_cm")
    snap = num.get("snapshot_every")
    if snap is None:
        n_steps = max(1, int(round(z_end / (dz or profile.period_cm / 2000))))
        snap = max(1, n_steps // 200)
    evolver = tb.evolve_bare if gauge is tb.Gauge.BARE else tb.evolve_gauged
    traj = evolver(state, params, profile, z_end, dz=dz, snapshot_every=snap,
                   boundary=boundary)
    p_of_z = diag.lattice_transition_probability(traj, params, profile)
    power = traj.power()
    summary = {
        "P_final": float(p_of_z[-1]),
        "power_drift": float(np.max(np.abs(power / power[0] - 1.0))),
        "phi0": drv.phase_amplitude(profile),
    }
    if boundary is tb.Boundary.HARD_WALL:
        summary["edge_power_fraction"] = traj.edge_power_fraction()
    if num.get("self_check"):
        half = evolver(state, params, profile, z_end,
                       dz=(dz or profile.period_cm / 2000) / 2,
                       snapshot_every=10**9, boundary=boundary)
        _self_check(summary, "P_final", p_of_z[-1],
                    diag.lattice_transition_probability(half.final, params,
                                                        profile), 1e-6)
    files = {}
    if out_dir is not None:
        sites = params.sites
        name = f"{scn.prefix}_sites.csv"
        rows = []
        for i, z in enumerate(traj.z):
            for j, site in enumerate(sites):
                c = traj.states[i, j]
                rows.append((z, float(site), c.real, c.imag))
        write_csv(os.path.join(out_dir, name), ["z", "site", "re", "im"], rows)
        name2 = f"{scn.prefix}_transition.csv"
        write_csv(os.path.join(out_dir, name2), ["z_cm", "P"],
                  list(zip(traj.z, p_of_z)))
        files[name] = files[name2] = None
    return files, summary


def _run_dirac(scn: Scenario, out_dir):
    params = scn.lattice_params()
    profile = scn.drive_profile()
    num = scn.section("numerics")
    inp = scn.section("input")
    grid = dirac_mod.XiGrid.centered(inp["xi_span"], inp["n_points"])
    q = _q_from_scenario(scn, params.spacing_cm)
    k0 = tl.zone_edge_k(q, params)
    field = dirac_mod.gaussian_spinor_packet(
        grid, k0, inp["width_xi"], params, scn.branch(), inp["center_xi"])
    z_end = num["z_end_cm"]
    dz = num.get("dz_cm")
    snap = num.get("snapshot_every")
    traj = dirac_mod.dirac_evolve(field, profile, params, z_end, dz=dz,
                                  snapshot_every=snap)
    weights = [dirac_mod.band_weights(
        dirac_mod.SpinorField(traj.psi1[i], traj.psi2[i], grid, traj.z[i]),
        params) for i in range(len(traj.z))]
    norms = traj.norms()
    summary = {
        "plus_weight_final": float(weights[-1][1]),
        "norm_drift": float(np.max(np.abs(norms / norms[0] - 1.0))),
        "k0": float(k0),
        "phi0": drv.phase_amplitude(profile),
    }
    if num.get("self_check"):
        half = dirac_mod.dirac_evolve(field, profile, params, z_end,
                                      dz=(dz or profile.period_cm / 2000) / 2)
        _self_check(summary, "plus_weight",
                    weights[-1][1],
                    dirac_mod.band_weights(half.final, params)[1], 1e-4)
    files = {}
    if out_dir is not None:
        rows = [(z, w[0], w[1], nn) for z, w, nn in zip(traj.z, weights, norms)]
        name = f"{scn.prefix}_weights.csv"
        write_csv(os.path.join(out_dir, name),
                  ["z_cm", "w_minus", "w_plus", "norm"], rows)
        files[name] = None
        for i, z in enumerate(traj.z):
            name = f"{scn.prefix}_spinor{i:04d}.bin"
            write_field_dump(os.path.join(out_dir, name),
                             [traj.psi1[i], traj.psi2[i]],
                             grid.xi_min, grid.xi_min + grid.span, z)
            files[name] = None
    return files, summary


def _run_bpm(scn: Scenario, out_dir):
    optics = scn.optics_params()
    profile = scn.drive_profile()
    num = scn.section("numerics")
    inp = scn.section("input")
    bands_cfg = scn.section("bands")
    grid = bpm_mod.TransverseGrid.for_cells(optics, num["grid_cells"],
                                            num["grid_points"])
    theta = (inp["theta_rad"] if inp.get("theta_rad") is not None
             else inp["theta_over_bragg"] * bpm_mod.bragg_angle(optics))
    field = bpm_mod.gaussian_tilted_input(inp["w0_um"], theta, optics, grid)
    band_structure = diag.bands_for_grid(
        optics, grid, n_plane_waves=bands_cfg["n_plane_waves"] if
        bands_cfg["n_plane_waves"] % 2 else bands_cfg["n_plane_waves"] + 1,
        n_bands=max(4, bands_cfg["n_bands"]))
    if inp["purify_band"]:
        field = diag.project_onto_band(field, band_structure, band=0)
    absorber = bpm_mod.AbsorberSpec(num["absorber_fraction"],
                                    num["absorber_strength_cm"],
                                    num["absorber_enabled"])
    z_end = num["z_end_cm"]
    dz = num.get("dz_cm") or 5e-4
    snap = num.get("snapshot_every")
    if snap is None:
        snap = max(1, int(round(z_end / dz)) // 10)
    gauge = bpm_mod.BpmGauge(num["bpm_gauge"])
    traj = bpm_mod.bpm_run(field, optics, profile, z_end, dz_cm=dz,
                           snapshot_every=snap, n_guides=num["n_guides"],
                           absorber=absorber, gauge=gauge)
    merge_um = num.get("census_merge_um") or 2 * optics.spacing_um
    obs = diag.observables_series(traj, band_structure,
                                  threshold=num["census_threshold"],
                                  merge_radius=merge_um)
    final_pops = diag.band_populations(traj.final, band_structure, 2)
    summary = {
        "band1_final": float(final_pops[0]),
        "band2_final": float(final_pops[1]),
        "miniband_transition": float(final_pops[1] / final_pops.sum()),
        "absorbed": float(traj.absorbed[-1]),
        "centroid_final_um": obs[-1].centroid_x,
        "n_packets_final": obs[-1].packet_count,
        "packet_velocities": [p.velocity for p in obs[-1].packets],
        "phi0": drv.phase_amplitude(profile),
    }
    if num.get("self_check"):
        half = bpm_mod.bpm_run(field, optics, profile, z_end, dz_cm=dz / 2,
                               snapshot_every=10**9, n_guides=num["n_guides"],
                               absorber=absorber, gauge=gauge)
        _self_check(summary, "band_populations", final_pops,
                    diag.band_populations(half.final, band_structure, 2), 1e-4)
    files = {}
    if out_dir is not None:
        rows = []
        for o in obs:
            row = [o.z, *o.band_power, o.remainder, o.centroid_x,
                   float(o.packet_count)]
            for p in o.packets:
                row.extend([p.center, p.power,
                            p.velocity if p.velocity is not None else 0.0])
            rows.append(row)
        name = f"{scn.prefix}_observables.csv"
        write_csv(os.path.join(out_dir, name),
                  ["z_cm", "band1", "band2", "remainder", "centroid_um",
                   "n_packets"], rows)
        files[name] = None
        for i, z in enumerate(traj.z):
            bname = f"{scn.prefix}_field{i:04d}.bin"
            write_field_dump(os.path.join(out_dir, bname), [traj.fields[i]],
                             grid.x_min_um, grid.x_min_um + grid.width_um, z)
            files[bname] = None
            cname = f"{scn.prefix}_intensity{i:04d}.csv"
            write_csv(os.path.join(out_dir, cname), ["x_um", "intensity"],
                      list(zip(grid.x_um, np.abs(traj.fields[i]) ** 2)))
            files[cname] = None
    return files, summary


def _run_bands(scn: Scenario, out_dir):
    optics = scn.optics_params()
    cfg = scn.section("bands")
    structure = bands_mod.plane_wave_bands(
        optics, n_plane_waves=cfg["n_plane_waves"], n_q=cfg["n_q"],
        n_bands=cfg["n_bands"],
        check_truncation=bool(scn.section("numerics").get("self_check")))
    fit = bands_mod.fit_tight_binding(structure)
    summary = {
        "fitted_sigma_cm": fit.sigma_cm,
        "fitted_delta_cm": fit.delta_cm,
        "fit_rms_residual": fit.rms_residual,
        "gap_edge_cm": float(structure.half_splitting().min()),
    }
    files = {}
    if out_dir is not None:
        a_cm = optics.spacing_um * CM_PER_UM
        rows = []
        for b in range(structure.n_bands):
            for i, q in enumerate(structure.q_values):
                rows.append((q * a_cm / np.pi, float(b + 1),
                             structure.omega[b, i]))
        name = f"{scn.prefix}_bands.csv"
        write_csv(os.path.join(out_dir, name),
                  ["qa_over_pi", "band_index", "omega_cm_inv"], rows)
        files[name] = None
        if cfg["dump_modes"]:
            iq = cfg["mode_q_index"]
            if iq < 0:
                iq = len(structure.q_values) // 2
            for b in range(structure.n_bands):
                x_um, u = structure.periodic_part(iq, b)
                mname = f"{scn.prefix}_mode_q{iq}_band{b + 1}.bin"
                write_field_dump(os.path.join(out_dir, mname), [u],
                                 0.0, 2 * optics.spacing_um, 0.0)
                files[mname] = None
    return files, summary


_TIER_RUNNERS = {
    "two_level": _run_two_level,
    "tight_binding": _run_tight_binding,
    "dirac": _run_dirac,
    "bpm": _run_bpm,
    "bands": _run_bands,
}


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def sweep_axis_values(sweep_cfg):
    if sweep_cfg.get("values") is not None:
        return list(sweep_cfg["values"])
    start, stop, step = sweep_cfg["start"], sweep_cfg["stop"], sweep_cfg["step"]
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _sweep_point(args):
    index, resolved_base, axis, value = args
    section, key = axis.split(".", 1)
    point = {sec: dict(keys) for sec, keys in resolved_base.items()}
    kind = SCHEMA[section][key][0]
    point.setdefault(section, {})[key] = int(value) if kind == "int" else value
    try:
        scn = Scenario(resolve(point))
        _, summary = _TIER_RUNNERS[scn.tier](scn, None)
        return index, summary, ""
    except BentLatticeError as exc:
        return index, None, f"error:{type(exc).__name__}"


def _run_sweep(scn: Scenario, out_dir, jobs=1):
    sweep_cfg = scn.section("sweep")
    axis = sweep_cfg["axis"]
    values = sweep_axis_values(sweep_cfg)
    base = {sec: dict(keys) for sec, keys in scn.resolved.items()}
    base["scenario"]["tier"] = sweep_cfg["tier"]
    base.pop("sweep", None)
    tasks = [(i, base, axis, v) for i, v in enumerate(values)]
    if jobs > 1:
        with multiprocessing.Pool(jobs) as pool:
            results = pool.map(_sweep_point, tasks)
    else:
        results = [_sweep_point(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    rows = []
    n_failed = 0
    for (_, summary, status), value in zip(results, values):
        point_drive = dict(scn.resolved["drive"])
        if axis.startswith("drive."):
            point_drive[axis.split(".", 1)[1]] = value
        phi0 = summary.get("phi0") if summary else float("nan")
        p_final = summary.get("P_final", summary.get("plus_weight_final",
                  summary.get("band2_final"))) if summary else float("nan")
        if summary is None:
            n_failed += 1
        rows.append((phi0 if phi0 is not None else float("nan"),
                     point_drive.get("period_cm", float("nan")),
                     scn.section("input")["qa_over_pi"] * np.pi,
                     float(sweep_cfg["n_target"]),
                     p_final if p_final is not None else float("nan"),
                     status or "ok"))
    files = {}
    if out_dir is not None:
        name = f"{scn.prefix}_sweep.csv"
        write_csv(os.path.join(out_dir, name),
                  ["phi0", "lambda_cm", "qa", "n_target", "P_final", "status"],
                  rows)
        files[name] = None
    summary = {
        "n_points": len(values),
        "n_failed": n_failed,
        "axis": axis,
        "P_first": rows[0][4] if rows else float("nan"),
        "P_last": rows[-1][4] if rows else float("nan"),
    }
    return files, summary, rows


# ---------------------------------------------------------------------------
# entry point and manifest
# ---------------------------------------------------------------------------

def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_scenario(scn: Scenario, out_dir, jobs: int = 1) -> dict:
    """Execute a scenario, write outputs and manifest, return the manifest."""
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    if scn.tier == "sweep":
        files, summary, _ = _run_sweep(scn, out_dir, jobs)
        if summary["n_failed"]:
            summary["status"] = "partial"
    elif scn.tier in _TIER_RUNNERS:
        files, summary = _TIER_RUNNERS[scn.tier](scn, out_dir)
        summary["status"] = "ok"
    else:
        raise ConfigError(f"unknown tier {scn.tier}", "scenario.tier")

    resolved_text = canonical_dump(scn.resolved)
    manifest = {
        "tool": {"name": "bentlattice", "version": _tool_version()},
        "tier": scn.tier,
        "name": scn.name,
        "config_sha256": hashlib.sha256(resolved_text.encode()).hexdigest(),
        "summary": summary,
        "outputs": {},
    }
    if out_dir is not None:
        cfg_name = f"{scn.prefix}_resolved.cfg"
        with open(os.path.join(out_dir, cfg_name), "w", encoding="utf-8") as fh:
            fh.write(resolved_text)
        files[cfg_name] = None
        manifest["outputs"] = {
            name: _sha256_file(os.path.join(out_dir, name))
            for name in sorted(files)
        }
        manifest["resolved_config"] = scn.resolved
        with open(os.path.join(out_dir, "manifest.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return manifest


def _tool_version():
    try:
        return pkg_version("bentlattice")
    except Exception:
        return "0.0.0+local"
