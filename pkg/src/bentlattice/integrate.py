"""Fixed-step classical 4th-order Runge-Kutta driver.

Deterministic trajectories are a repo-wide requirement, so all ODE tiers
share this one integrator: a fixed step chosen to divide the span exactly,
no adaptivity, no randomness.
"""

from __future__ import annotations

import numpy as np


def step_count(span: float, dz: float) -> int:
    """Number of fixed steps covering ``span`` with target step ``dz``."""
    if span <= 0:
        raise ValueError("span must be positive")
    if dz <= 0:
        raise ValueError("dz must be positive")
    return max(1, int(round(span / dz)))


def rk4_step(rhs, z, y, dz):
    k1 = rhs(z, y)
    k2 = rhs(z + 0.5 * dz, y + 0.5 * dz * k1)
    k3 = rhs(z + 0.5 * dz, y + 0.5 * dz * k2)
    k4 = rhs(z + dz, y + dz * k3)
    return y + (dz / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_evolve(rhs, y0, z0, z1, dz, snapshot_every=None, callback=None):
    """Integrate dy/dz = rhs(z, y) from z0 to z1 with fixed RK4 steps.

    The step is adjusted to span/(round(span/dz)) so the endpoint is hit
    exactly.  Returns ``(z_snapshots, y_snapshots)`` with the initial and
    final states always included.  ``callback(i_step, z, y)`` runs after
    every accepted step (used for conservation monitoring).
    """
    n = step_count(z1 - z0, dz)
    h = (z1 - z0) / n
    if snapshot_every is None:
        snapshot_every = n
    zs = [z0]
    ys = [np.array(y0, copy=True)]
    y = np.array(y0, copy=True)
    z = z0
    for i in range(n):
        y = rk4_step(rhs, z, y, h)
        z = z0 + (i + 1) * h
        if callback is not None:
            callback(i, z, y)
        if (i + 1) % snapshot_every == 0 or i == n - 1:
            zs.append(z)
            ys.append(np.array(y, copy=True))
    return np.array(zs), np.array(ys)
