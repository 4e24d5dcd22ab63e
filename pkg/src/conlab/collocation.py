"""Admissible input grids the physics losses are enforced on.

Collocation rows are the training "coordinates": the load at the new
step plus history variables from the old one.  They are plain tensor
grids filtered down to physically admissible combinations -- the
accumulated plastic strain can never be smaller than the plastic strain
magnitude, and damage and its hardening variable evolve in lockstep so
only rows with identical values exist.

A range is the triple ``(begin, step, end)`` with ``end`` included when
it sits on the grid.
"""

import numpy as np

from .errors import EmptyRangeError

__all__ = [
    "grid_1d",
    "gen_collocation_plastic",
    "gen_collocation_damage",
    "gen_collocation_cz3d",
]

# Default grids used by the shipped training configs.
PLASTIC_RANGE = (0.0, 0.01, 1.0)
DAMAGE_RANGE = (0.0, 0.02, 1.0)
CZ3D_GAP_RANGE = (0.0, 0.1, 1.0)
CZ3D_DAMAGE_RANGE = (0.0, 0.1, 1.0)


def grid_1d(rng):
    """Inclusive grid begin:step:end, robust to floating-point step counts."""
    begin, step, end = (float(v) for v in rng)
    if step <= 0.0:
        raise EmptyRangeError(f"step must be positive, got {step}")
    if end < begin:
        raise EmptyRangeError(f"empty range: end {end} < begin {begin}")
    count = int(np.floor((end - begin) / step + 1e-9)) + 1
    return begin + step * np.arange(count)


def gen_collocation_plastic(eps_range=PLASTIC_RANGE, eps_p_range=PLASTIC_RANGE,
                            xi_p_range=PLASTIC_RANGE):
    """Grid of (eps_next, eps_p_old, xi_p_old) rows with xi_p >= |eps_p|.

    Row order is the nested-loop order eps (outer), eps_p, xi_p (inner).
    For the usual non-negative ranges the admissibility filter is
    exactly xi_p >= eps_p; allowing negative strain ranges (useful when
    the surrogate must also serve compressed members) generalises it to
    the magnitude.
    """
    eps = grid_1d(eps_range)
    eps_p = grid_1d(eps_p_range)
    xi_p = grid_1d(xi_p_range)
    e_g, ep_g, xi_g = np.meshgrid(eps, eps_p, xi_p, indexing="ij")
    rows = np.column_stack([e_g.ravel(), ep_g.ravel(), xi_g.ravel()])
    mask = rows[:, 2] + 1e-12 >= np.abs(rows[:, 1])
    return rows[mask]


def gen_collocation_damage(gap_range=DAMAGE_RANGE, damage_range=DAMAGE_RANGE):
    """Grid of (gap_next, d_old, xi_d_old) rows with xi_d == d.

    The hardening variable is not an independent axis: its evolution
    equation ties it to the damage one-to-one, so each (g, d) pair
    yields exactly one admissible row.
    """
    gap = grid_1d(gap_range)
    dam = grid_1d(damage_range)
    g_g, d_g = np.meshgrid(gap, dam, indexing="ij")
    return np.column_stack([g_g.ravel(), d_g.ravel(), d_g.ravel()])


def gen_collocation_cz3d(gap_s1_range=CZ3D_GAP_RANGE, gap_s2_range=CZ3D_GAP_RANGE,
                         gap_n_range=CZ3D_GAP_RANGE, damage_range=CZ3D_DAMAGE_RANGE):
    """Grid of (g_s1, g_s2, g_n, d_old, xi_d_old) rows with xi_d == d.

    Three gap axes multiply quickly, so the default steps are coarser
    than in 1D to keep the row count workable.
    """
    gs1 = grid_1d(gap_s1_range)
    gs2 = grid_1d(gap_s2_range)
    gn = grid_1d(gap_n_range)
    dam = grid_1d(damage_range)
    a, b, c, d = np.meshgrid(gs1, gs2, gn, dam, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel(), c.ravel(), d.ravel(), d.ravel()])
