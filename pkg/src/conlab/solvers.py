"""Reference integrators for the three material models.

The implicit routines follow the classical return-mapping pattern: an
elastic predictor, then a 2x2 local Newton correction that drives the
discrete evolution equation and the yield condition to zero.  They are
the accuracy oracle the trained networks are measured against.

``explicit_damage_step`` is the algebraic single-pass alternative that
updates damage from the previous step's hardening state without any
iteration.  It is cheap but only stable for very fine pseudo-time
steps; the timestep studies in :mod:`conlab.driver` quantify that.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NonConvergenceError
from .materials import (
    DamageState,
    PlasticState,
    cz3d_tangent,
    cz3d_trial_yield,
    damage_tangent,
    damage_trial_yield,
    plastic_tangent,
    plastic_trial_yield,
    sign,
    voce_conjugate,
    voce_energy,
)

__all__ = [
    "SolverConfig",
    "StepResult",
    "DAMAGE_CAP",
    "solve_plastic_step",
    "solve_damage_step",
    "solve_cz3d_step",
    "explicit_damage_step",
]

# Damage is capped strictly below one so the degraded stiffness stays
# positive; steps that hit the cap are flagged, not failed.
DAMAGE_CAP = 1.0 - 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Local Newton settings: residual tolerance and iteration cap."""

    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True)
class StepResult:
    """Outcome of one constitutive step.

    force : stress or traction at the new load
    state : updated history variables (identical object when elastic)
    tangent : consistent d(force)/d(load), scalar or 3x3
    delta_lambda : multiplier increment, >= 0
    iterations : local Newton iterations spent (0 if elastic)
    psi : free energy at the new point
    saturated : True if damage had to be capped below one
    """

    force: Union[float, np.ndarray]
    state: Union[PlasticState, DamageState]
    tangent: Union[float, np.ndarray]
    delta_lambda: float
    iterations: int
    psi: float
    saturated: bool = False


def solve_plastic_step(eps_next, state, p, cfg=DEFAULT_SOLVER):
    """Advance the plasticity model to the strain ``eps_next``.

    Elastic predictor first; if the trial state is admissible the
    history is returned untouched and the tangent is E.  Otherwise the
    two residuals

        r1 = eps_p - eps_p_old - (xi_p - xi_p_old) * sgn(sigma_tr)
        r2 = sgn(sigma_tr) * sigma - (sigma_y0 + q_p(xi_p))

    are solved with an analytic-Jacobian Newton iteration started from
    the trial (frozen) values.

    Raises
    ------
    NonConvergenceError
        If the residual norm is still above ``cfg.tol`` after
        ``cfg.max_iter`` Newton updates.
    """
    phi_tr = plastic_trial_yield(eps_next, state, p)
    if phi_tr <= 0.0:
        eps_e = eps_next - state.eps_p
        psi = 0.5 * p.E * eps_e * eps_e + voce_energy(p.h1, p.h2, state.xi_p)
        return StepResult(
            force=p.E * eps_e,
            state=state,
            tangent=plastic_tangent(state, p, plastic_active=False),
            delta_lambda=0.0,
            iterations=0,
            psi=psi,
        )

    # The flow direction is fixed by the trial stress; it cannot flip
    # during the correction because |sigma| only shrinks toward the
    # yield surface.
    s = sign(p.E * (eps_next - state.eps_p))
    eps_p = state.eps_p
    xi_p = state.xi_p
    iterations = 0
    res_norm = math.inf
    for _ in range(cfg.max_iter):
        sigma = p.E * (eps_next - eps_p)
        r = np.array([
            eps_p - state.eps_p - (xi_p - state.xi_p) * s,
            s * sigma - (p.sigma_y0 + voce_conjugate(p.h1, p.h2, xi_p)),
        ])
        res_norm = float(np.max(np.abs(r)))
        if res_norm <= cfg.tol:
            break
        jac = np.array([
            [1.0, -s],
            [-s * p.E, -p.h1 * p.h2 * math.exp(-p.h2 * xi_p)],
        ])
        d_unknowns = np.linalg.solve(jac, r)
        eps_p -= d_unknowns[0]
        xi_p -= d_unknowns[1]
        iterations += 1
    else:
        raise NonConvergenceError(
            f"plastic step at eps={eps_next} did not converge "
            f"(residual {res_norm:.3e} after {cfg.max_iter} iterations)",
            residual_norm=res_norm,
            iterations=cfg.max_iter,
        )

    state_next = PlasticState(eps_p=eps_p, xi_p=xi_p)
    eps_e = eps_next - eps_p
    psi = 0.5 * p.E * eps_e * eps_e + voce_energy(p.h1, p.h2, xi_p)
    return StepResult(
        force=p.E * eps_e,
        state=state_next,
        tangent=plastic_tangent(state_next, p, plastic_active=True),
        delta_lambda=xi_p - state.xi_p,
        iterations=iterations,
        psi=psi,
    )


def _solve_damage_consistency(q_top, state, p, cfg):
    """Newton on the damage residuals for a fixed drive factor q_top = g.K.g.

    Returns (d, xi_d, iterations, saturated).
    """
    d = state.d
    xi_d = state.xi_d
    iterations = 0
    saturated = False
    res_norm = math.inf
    for _ in range(cfg.max_iter):
        r = np.array([
            d - state.d - (xi_d - state.xi_d),
            (1.0 - d) * q_top - (p.Y0 + voce_conjugate(p.h1, p.h2, xi_d)),
        ])
        res_norm = float(np.max(np.abs(r)))
        if res_norm <= cfg.tol:
            break
        jac = np.array([
            [1.0, -1.0],
            [-q_top, -p.h1 * p.h2 * math.exp(-p.h2 * xi_d)],
        ])
        d_unknowns = np.linalg.solve(jac, r)
        d -= d_unknowns[0]
        xi_d -= d_unknowns[1]
        if d > DAMAGE_CAP:
            # The consistency equation always has a root below one, but a
            # Newton overshoot may leave the admissible range; pull the
            # iterate back to the cap and keep going.
            saturated = True
            xi_d += DAMAGE_CAP - d
            d = DAMAGE_CAP
        iterations += 1
    else:
        raise NonConvergenceError(
            f"damage step (drive {q_top:.3e}) did not converge "
            f"(residual {res_norm:.3e} after {cfg.max_iter} iterations)",
            residual_norm=res_norm,
            iterations=cfg.max_iter,
        )
    return d, xi_d, iterations, saturated


def solve_damage_step(g_next, state, p, cfg=DEFAULT_SOLVER):
    """Advance the 1D interface damage model to the gap ``g_next``.

    Identical predictor/corrector structure as the plastic step.  The
    evolution law forces equal increments of d and xi_d, which the
    Newton system reproduces exactly.
    """
    kg = p.K * g_next
    q_top = kg * g_next
    phi_tr = damage_trial_yield(g_next, state, p)
    if phi_tr <= 0.0:
        f_d = (1.0 - state.d) ** 2
        psi = 0.5 * f_d * q_top + voce_energy(p.h1, p.h2, state.xi_d)
        return StepResult(
            force=f_d * kg,
            state=state,
            tangent=damage_tangent(state, g_next, p, active=False),
            delta_lambda=0.0,
            iterations=0,
            psi=psi,
        )

    d, xi_d, iterations, saturated = _solve_damage_consistency(q_top, state, p, cfg)
    state_next = DamageState(d=d, xi_d=xi_d)
    f_d = (1.0 - d) ** 2
    psi = 0.5 * f_d * q_top + voce_energy(p.h1, p.h2, xi_d)
    return StepResult(
        force=f_d * kg,
        state=state_next,
        tangent=damage_tangent(state_next, g_next, p, active=True),
        delta_lambda=xi_d - state.xi_d,
        iterations=iterations,
        psi=psi,
        saturated=saturated,
    )


def solve_cz3d_step(g_next, state, p, cfg=DEFAULT_SOLVER):
    """Advance the 3D cohesive-zone model to the gap vector ``g_next``.

    The residual system is the 1D one with the drive factor K*g^2
    replaced by the quadratic form g.K.g, so a gap vector with zero
    shear components reproduces :func:`solve_damage_step` bit-for-bit.
    """
    g_next = np.asarray(g_next, dtype=float)
    kg = p.stiffness_diag() * g_next
    q_top = float(kg @ g_next)
    phi_tr = cz3d_trial_yield(g_next, state, p)
    if phi_tr <= 0.0:
        f_d = (1.0 - state.d) ** 2
        psi = 0.5 * f_d * q_top + voce_energy(p.h1, p.h2, state.xi_d)
        return StepResult(
            force=f_d * kg,
            state=state,
            tangent=cz3d_tangent(state, g_next, p, active=False),
            delta_lambda=0.0,
            iterations=0,
            psi=psi,
        )

    d, xi_d, iterations, saturated = _solve_damage_consistency(q_top, state, p, cfg)
    state_next = DamageState(d=d, xi_d=xi_d)
    f_d = (1.0 - d) ** 2
    psi = 0.5 * f_d * q_top + voce_energy(p.h1, p.h2, xi_d)
    return StepResult(
        force=f_d * kg,
        state=state_next,
        tangent=cz3d_tangent(state_next, g_next, p, active=True),
        delta_lambda=xi_d - state.xi_d,
        iterations=iterations,
        psi=psi,
        saturated=saturated,
    )


def explicit_damage_step(g_next, state, p):
    """Iteration-free damage update from previous-step information.

    The trial yield is evaluated with the frozen hardening state; when
    it is positive the new damage follows from the yield condition with
    the old hardening force,

        d_next = 1 - (Y0 + q_d(xi_old)) / (g.K.g),

    clamped to be non-decreasing and below one.  Accepts a scalar gap
    with :class:`DamageParams` or a 3-vector with :class:`Cz3dParams`.
    No equations are solved, which is the entire point of the scheme,
    and also why it needs very small steps to stay accurate.
    """
    if np.ndim(g_next) == 0:
        kg = p.K * g_next
        q_top = kg * g_next
    else:
        g_next = np.asarray(g_next, dtype=float)
        kg = p.stiffness_diag() * g_next
        q_top = float(kg @ g_next)

    q_d = voce_conjugate(p.h1, p.h2, state.xi_d)
    phi_tr = (1.0 - state.d) * q_top - (p.Y0 + q_d)
    if phi_tr > 0.0:
        d_next = 1.0 - (p.Y0 + q_d) / q_top
        d_next = min(max(d_next, state.d), DAMAGE_CAP)
        state_next = DamageState(d=d_next, xi_d=state.xi_d + (d_next - state.d))
        saturated = d_next >= DAMAGE_CAP
    else:
        state_next = state
        saturated = False

    f_d = (1.0 - state_next.d) ** 2
    psi = 0.5 * f_d * q_top + voce_energy(p.h1, p.h2, state_next.xi_d)
    if np.ndim(g_next) == 0:
        tangent = f_d * p.K
    else:
        tangent = f_d * np.diag(p.stiffness_diag())
    return StepResult(
        force=f_d * kg,
        state=state_next,
        tangent=tangent,
        delta_lambda=state_next.xi_d - state.xi_d,
        iterations=0,
        psi=psi,
        saturated=saturated,
    )
