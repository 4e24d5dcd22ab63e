"""Closed-form constitutive relations for the three material models.

Everything in this module is a pure function of its arguments: free
energies, conjugate forces, yield functions and tangent operators for

* 1D elastoplasticity with saturating (Voce) isotropic hardening,
* a 1D interface damage model with nonlinear softening,
* its 3D cohesive-zone extension with an anisotropic stiffness tensor.

Both the iterative solvers in :mod:`conlab.solvers` and the network
training losses in :mod:`conlab.losses` are built on these expressions,
so the two routes can never drift apart on the underlying physics.

Units follow the usual interface-mechanics convention: stresses and
tractions in MPa, gaps in mm, the damage drive in MPa*mm.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

__all__ = [
    "PlasticityParams",
    "DamageParams",
    "Cz3dParams",
    "PlasticState",
    "DamageState",
    "Response",
    "DEFAULT_PLASTICITY",
    "DEFAULT_DAMAGE",
    "DEFAULT_CZ3D",
    "TRIAL_FORMS",
    "sign",
    "voce_conjugate",
    "voce_energy",
    "plastic_response",
    "plastic_yield",
    "plastic_trial_yield",
    "plastic_tangent",
    "damage_response",
    "damage_yield",
    "damage_trial_yield",
    "damage_tangent",
    "cz3d_response",
    "cz3d_trial_yield",
    "cz3d_tangent",
    "dissipation_increment",
]


# --------------------------------------------------------------------------
# parameter sets and state variables
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PlasticityParams:
    """Constants of the elastoplastic model.

    E : elastic stiffness [MPa]
    sigma_y0 : initial yield stress [MPa]
    h1, h2 : hardening modulus [MPa] and rate [-] of the saturating law
    """

    E: float
    sigma_y0: float
    h1: float
    h2: float

    def __post_init__(self):
        if self.E <= 0.0:
            raise ValueError("stiffness E must be positive")
        if self.sigma_y0 <= 0.0:
            raise ValueError("initial yield stress must be positive")
        if self.h1 < 0.0 or self.h2 < 0.0:
            raise ValueError("hardening parameters must be non-negative")


@dataclass(frozen=True)
class DamageParams:
    """Constants of the 1D interface damage model.

    K : undamaged interface stiffness [MPa/mm]
    Y0 : damage initiation threshold [MPa mm]
    h1, h2 : damage hardening modulus [MPa mm] and rate [1/mm]
    """

    K: float
    Y0: float
    h1: float
    h2: float

    def __post_init__(self):
        if self.K <= 0.0:
            raise ValueError("interface stiffness K must be positive")
        if self.Y0 <= 0.0:
            raise ValueError("initiation threshold Y0 must be positive")
        if self.h1 < 0.0 or self.h2 < 0.0:
            raise ValueError("hardening parameters must be non-negative")


@dataclass(frozen=True)
class Cz3dParams:
    """Constants of the 3D cohesive-zone model.

    The stiffness tensor is diagonal in the interface frame with two
    shear entries (K_s1, K_s2) and one normal entry (K_n).  Gap and
    traction vectors are ordered (s1, s2, n) throughout.
    """

    K_s1: float
    K_s2: float
    K_n: float
    Y0: float
    h1: float
    h2: float

    def __post_init__(self):
        if min(self.K_s1, self.K_s2, self.K_n) <= 0.0:
            raise ValueError("all interface stiffnesses must be positive")
        if self.Y0 <= 0.0:
            raise ValueError("initiation threshold Y0 must be positive")
        if self.h1 < 0.0 or self.h2 < 0.0:
            raise ValueError("hardening parameters must be non-negative")

    def stiffness_diag(self):
        """Diagonal of the interface stiffness tensor as an array."""
        return np.array([self.K_s1, self.K_s2, self.K_n])


# Reference parameter sets used by the shipped demos and tests.
DEFAULT_PLASTICITY = PlasticityParams(E=3.0, sigma_y0=0.6, h1=0.4, h2=10.0)
DEFAULT_DAMAGE = DamageParams(K=5.0, Y0=0.1, h1=2.0, h2=100.0)
DEFAULT_CZ3D = Cz3dParams(K_s1=0.5, K_s2=2.0, K_n=5.0, Y0=0.1, h1=2.0, h2=100.0)


@dataclass(frozen=True)
class PlasticState:
    """History variables of the plasticity model.

    eps_p is the plastic strain, xi_p the accumulated plastic strain.
    Admissible states satisfy xi_p >= |eps_p|; xi_p never decreases
    along a solver trajectory.
    """

    eps_p: float = 0.0
    xi_p: float = 0.0


@dataclass(frozen=True)
class DamageState:
    """History variables of the damage models.

    The evolution laws force the damage variable d and the hardening
    variable xi_d to grow at identical rates, so admissible states have
    xi_d == d and both live in [0, 1).
    """

    d: float = 0.0
    xi_d: float = 0.0


@dataclass(frozen=True)
class Response:
    """Free energy and conjugate forces at a given load/state point.

    force : stress (scalar) or traction (scalar / 3-vector)
    conjugate : hardening force q conjugate to xi
    drive : damage energy release rate Y (None for plasticity)
    """

    psi: float
    psi_e: float
    psi_h: float
    force: Union[float, np.ndarray]
    conjugate: float
    drive: Optional[float] = None


TRIAL_FORMS = ("degraded", "undegraded", "linear")


def sign(x):
    """Sign with the tie broken toward +1 (only reachable at zero stress)."""
    return 1.0 if x >= 0.0 else -1.0


# --------------------------------------------------------------------------
# shared hardening law
# --------------------------------------------------------------------------

def voce_conjugate(h1, h2, xi):
    """Saturating hardening force q(xi) = h1 * (1 - exp(-h2 * xi))."""
    return h1 * (1.0 - np.exp(-h2 * xi))


def voce_energy(h1, h2, xi):
    """Stored hardening energy h1 * (xi + (exp(-h2*xi) - 1) / h2)."""
    if h2 == 0.0:
        return 0.0
    return h1 * (xi + (np.exp(-h2 * xi) - 1.0) / h2)


# --------------------------------------------------------------------------
# 1D plasticity
# --------------------------------------------------------------------------

def plastic_response(eps, state, p):
    """Evaluate energy and conjugate forces of the plasticity model.

    Parameters
    ----------
    eps : float
        Total strain.
    state : PlasticState
        Current history variables.
    p : PlasticityParams

    Returns
    -------
    Response
        With force = E*(eps - eps_p) and conjugate = q_p(xi_p).
    """
    eps_e = eps - state.eps_p
    psi_e = 0.5 * p.E * eps_e * eps_e
    psi_h = voce_energy(p.h1, p.h2, state.xi_p)
    return Response(
        psi=psi_e + psi_h,
        psi_e=psi_e,
        psi_h=psi_h,
        force=p.E * eps_e,
        conjugate=voce_conjugate(p.h1, p.h2, state.xi_p),
    )


def plastic_yield(sigma, q_p, p):
    """Yield function |sigma| - (sigma_y0 + q_p)."""
    return abs(sigma) - (p.sigma_y0 + q_p)


def plastic_trial_yield(eps_next, state, p):
    """Yield function of the elastic predictor (history frozen)."""
    sigma_tr = p.E * (eps_next - state.eps_p)
    return abs(sigma_tr) - (p.sigma_y0 + voce_conjugate(p.h1, p.h2, state.xi_p))


def plastic_tangent(state_next, p, plastic_active):
    """Consistent tangent d sigma / d eps after a converged step.

    Elastic branch returns E; the plastic branch accounts for the
    change of the internal variables with the applied strain.
    """
    if not plastic_active:
        return p.E
    hard = p.h1 * p.h2 * math.exp(-p.h2 * state_next.xi_p)
    return p.E * (1.0 - p.E / (p.E + hard))


# --------------------------------------------------------------------------
# 1D interface damage
# --------------------------------------------------------------------------

def damage_response(g, state, p):
    """Evaluate energy and conjugate forces of the interface model.

    The traction is T = (1-d)^2 * K * g and the damage drive
    Y = (1-d) * K * g^2 follows from Y = -d(psi)/d(d).
    """
    f_d = (1.0 - state.d) ** 2
    kg = p.K * g
    q_top = kg * g
    psi_e = 0.5 * f_d * q_top
    psi_h = voce_energy(p.h1, p.h2, state.xi_d)
    return Response(
        psi=psi_e + psi_h,
        psi_e=psi_e,
        psi_h=psi_h,
        force=f_d * kg,
        conjugate=voce_conjugate(p.h1, p.h2, state.xi_d),
        drive=(1.0 - state.d) * q_top,
    )


def damage_yield(drive, q_d, p):
    """Damage yield function Y - (Y0 + q_d)."""
    return drive - (p.Y0 + q_d)


def damage_trial_yield(g_next, state, p, form="degraded"):
    """Trial yield function with history variables frozen.

    ``form`` selects the predictor expression:

    * ``"degraded"`` (default): (1-d) * K * g^2, the energy-consistent
      drive evaluated with the old damage,
    * ``"undegraded"``: K * g^2, ignoring the stiffness degradation,
    * ``"linear"``: (1-d) * K * g, dimensionally a traction.

    The alternates exist for reproduction studies only; every solver and
    loss in this package uses the degraded quadratic form.
    """
    q_d = voce_conjugate(p.h1, p.h2, state.xi_d)
    kg2 = (p.K * g_next) * g_next
    if form == "degraded":
        drive = (1.0 - state.d) * kg2
    elif form == "undegraded":
        drive = kg2
    elif form == "linear":
        drive = (1.0 - state.d) * p.K * g_next
    else:
        raise ValueError(f"unknown trial form {form!r}, expected one of {TRIAL_FORMS}")
    return drive - (p.Y0 + q_d)


def damage_tangent(state_next, g_next, p, active):
    """Consistent tangent dT/dg after a converged damage step.

    The inactive branch is the degraded elastic stiffness.  In the
    active branch the damage increment follows the gap through the
    consistency condition, which yields

        dd/dg = 2 (1-d) K g / (K g^2 + h1 h2 exp(-h2 xi_d))

    and the tangent below by total differentiation of T = (1-d)^2 K g.
    """
    f_d = (1.0 - state_next.d) ** 2
    if not active:
        return f_d * p.K
    kg = p.K * g_next
    q_top = kg * g_next
    denom = q_top + p.h1 * p.h2 * math.exp(-p.h2 * state_next.xi_d)
    # Same operation order as the 3D outer-product form so the normal
    # component of the 3D tangent matches this one bit-for-bit.
    return f_d * p.K - 4.0 * f_d * (kg * kg) / denom


# --------------------------------------------------------------------------
# 3D cohesive zone
# --------------------------------------------------------------------------

def cz3d_response(g, state, p):
    """Energy and conjugate forces of the 3D cohesive-zone model.

    ``g`` is the gap vector (g_s1, g_s2, g_n).  With the diagonal
    stiffness tensor K the traction is t = (1-d)^2 K g and the damage
    drive Y = (1-d) g.K.g.  Zero shear gaps reduce every output to the
    1D interface model bit-for-bit.
    """
    g = np.asarray(g, dtype=float)
    f_d = (1.0 - state.d) ** 2
    kg = p.stiffness_diag() * g
    q_top = float(kg @ g)
    psi_e = 0.5 * f_d * q_top
    psi_h = voce_energy(p.h1, p.h2, state.xi_d)
    return Response(
        psi=psi_e + psi_h,
        psi_e=psi_e,
        psi_h=psi_h,
        force=f_d * kg,
        conjugate=voce_conjugate(p.h1, p.h2, state.xi_d),
        drive=(1.0 - state.d) * q_top,
    )


def cz3d_trial_yield(g_next, state, p):
    """Trial yield of the 3D model (degraded quadratic form)."""
    g_next = np.asarray(g_next, dtype=float)
    q_top = float((p.stiffness_diag() * g_next) @ g_next)
    q_d = voce_conjugate(p.h1, p.h2, state.xi_d)
    return (1.0 - state.d) * q_top - (p.Y0 + q_d)


def cz3d_tangent(state_next, g_next, p, active):
    """Consistent 3x3 tangent dt/dg of the cohesive-zone model."""
    g_next = np.asarray(g_next, dtype=float)
    kd = p.stiffness_diag()
    f_d = (1.0 - state_next.d) ** 2
    elastic = f_d * np.diag(kd)
    if not active:
        return elastic
    kg = kd * g_next
    q_top = float(kg @ g_next)
    denom = q_top + p.h1 * p.h2 * math.exp(-p.h2 * state_next.xi_d)
    return elastic - 4.0 * f_d * np.outer(kg, kg) / denom


# --------------------------------------------------------------------------
# dissipation bookkeeping
# --------------------------------------------------------------------------

def dissipation_increment(resp_trial, state_prev, state_next, model):
    """Discrete dissipation of one step as an explicit product.

    The rate form (sigma*deps_p - q_p*dxi_p for plasticity,
    Y*dd - q_d*dxi_d for the damage models) is integrated with the
    forces of the elastic predictor: the new load paired with the
    step-start internal state, which is what ``resp_trial`` must hold.
    With that quadrature the increment is a discrete KKT statement --
    whenever the step is inelastic the trial force exceeds the frozen
    hardening force by at least the yield threshold, so the product is
    provably non-negative (frozen steps give exactly zero).  Forces at
    the previous load would not have that guarantee: a coarse step that
    re-activates evolution can start below the hardening force.
    """
    if model == "plasticity":
        d_eps_p = state_next.eps_p - state_prev.eps_p
        d_xi_p = state_next.xi_p - state_prev.xi_p
        return resp_trial.force * d_eps_p - resp_trial.conjugate * d_xi_p
    if model in ("damage", "cz3d"):
        d_d = state_next.d - state_prev.d
        d_xi = state_next.xi_d - state_prev.xi_d
        return resp_trial.drive * d_d - resp_trial.conjugate * d_xi
    raise ValueError(f"unknown model {model!r}")
