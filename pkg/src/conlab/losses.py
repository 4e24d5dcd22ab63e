"""Physics loss terms for training the constitutive surrogates.

Each model carries six mean-squared loss terms over a collocation
batch, mirroring the branches of the return-mapping algorithm:

* ``ue``/``ux`` pin both internal variables when the trial state is
  elastic (no evolution below the yield surface),
* ``ev``/``yl`` enforce the discrete evolution equation and the yield
  condition when the trial state is inelastic,
* ``ke``/``ky`` penalise violations of the complementarity conditions
  (yield function must stay non-positive, the multiplier non-negative).

The elastic/inelastic branching rides on the sign of the trial yield
function through a switch function: a hard relu by default, or its
smoothed variant x*sigmoid(R*x) which makes every term differentiable.
The stress sign inside the plastic evolution term can likewise stay a
hard sgn or become sigmoid(R*x); the collocation grids keep strains
non-negative so the (0,1)-valued replacement is used as-is.  A
symmetric variant 2*sigmoid(R*x)-1 is available for training on
sign-indefinite grids.

The array-level ``*_loss_terms`` functions take raw network outputs and
also return the exact derivative of the weighted total w.r.t. those
outputs, which is what the training loop feeds into backprop.  The
``*_losses`` wrappers evaluate a pair of networks first.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, MissingLabelsError
from .network import activation, activation_prime, backprop, forward_batch

__all__ = [
    "LossWeights",
    "LossReport",
    "UNIT_WEIGHTS",
    "TUNED_PLASTIC_WEIGHTS",
    "plastic_loss_terms",
    "damage_loss_terms",
    "cz3d_loss_terms",
    "plastic_losses",
    "damage_losses",
    "cz3d_losses",
    "data_loss",
]


@dataclass(frozen=True)
class LossWeights:
    """Weighting of the six loss terms; all must be non-negative."""

    ue: float = 1.0
    ux: float = 1.0
    ev: float = 1.0
    yl: float = 1.0
    ke: float = 1.0
    ky: float = 1.0

    def __post_init__(self):
        if min(self.ue, self.ux, self.ev, self.yl, self.ke, self.ky) < 0.0:
            raise ValueError("loss weights must be non-negative")


UNIT_WEIGHTS = LossWeights()
# Balanced weighting found for the plasticity model: the frozen-state and
# complementarity terms start out orders of magnitude below the evolution
# terms and need boosting before the surrogate generalises well.
TUNED_PLASTIC_WEIGHTS = LossWeights(ue=100.0, ux=100.0, ev=1.0, yl=10.0, ke=100.0, ky=10.0)


@dataclass(frozen=True)
class LossReport:
    """Per-term mean-squared values plus their weighted total."""

    ue: float
    ux: float
    ev: float
    yl: float
    ke: float
    ky: float
    total: float
    epoch: int = -1

    def terms(self):
        return {"ue": self.ue, "ux": self.ux, "ev": self.ev,
                "yl": self.yl, "ke": self.ke, "ky": self.ky}


def _switch(kind, x, r):
    if kind == "relu":
        return activation("relu", x)
    if kind == "swish":
        return activation("swish", x, r)
    raise ValueError(f"unknown switch {kind!r}, expected 'relu' or 'swish'")


def _switch_prime(kind, x, r):
    if kind == "relu":
        return activation_prime("relu", x)
    return activation_prime("swish", x, r)


def _sign_fn(mode, x, r):
    if mode == "hard":
        return np.where(x >= 0.0, 1.0, -1.0)
    if mode == "sigmoid":
        return activation("sigmoid", r * x)
    if mode == "sym_sigmoid":
        return 2.0 * activation("sigmoid", r * x) - 1.0
    raise ValueError(f"unknown sign mode {mode!r}")


def _sign_fn_prime(mode, x, r):
    if mode == "hard":
        return np.zeros_like(x)
    s = activation("sigmoid", r * x)
    d = r * s * (1.0 - s)
    if mode == "sigmoid":
        return d
    return 2.0 * d


def _assemble(residuals, partials1, partials2, weights, epoch=-1):
    """Mean-square each residual and build the total plus output grads."""
    n = residuals["ue"].shape[0]
    w = {"ue": weights.ue, "ux": weights.ux, "ev": weights.ev,
         "yl": weights.yl, "ke": weights.ke, "ky": weights.ky}
    means = {k: float(np.mean(r * r)) for k, r in residuals.items()}
    total = sum(w[k] * means[k] for k in means)
    report = LossReport(ue=means["ue"], ux=means["ux"], ev=means["ev"],
                        yl=means["yl"], ke=means["ke"], ky=means["ky"],
                        total=float(total), epoch=epoch)
    grad1 = np.zeros(n)
    grad2 = np.zeros(n)
    for k, r in residuals.items():
        scale = 2.0 * w[k] / n
        if k in partials1:
            grad1 += scale * r * partials1[k]
        if k in partials2:
            grad2 += scale * r * partials2[k]
    return report, grad1, grad2


# --------------------------------------------------------------------------
# plasticity
# --------------------------------------------------------------------------

def plastic_loss_terms(inputs, out_eps_p, out_xi_p, p, weights=UNIT_WEIGHTS,
                       switch="relu", sign_mode="hard", r=300.0):
    """Loss terms for raw plasticity outputs.

    Parameters
    ----------
    inputs : (n, 3) array
        Rows (eps_next, eps_p_old, xi_p_old).
    out_eps_p, out_xi_p : (n,) arrays
        Network predictions for the updated internal variables.
    p : PlasticityParams
    switch : {"relu", "swish"}
        Branch gate on the trial yield sign.
    sign_mode : {"hard", "sigmoid", "sym_sigmoid"}
        Stress sign inside the evolution residual.

    Returns
    -------
    (LossReport, d_total/d_out_eps_p, d_total/d_out_xi_p)
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != 3:
        raise DimensionMismatchError(f"expected (n, 3) inputs, got {inputs.shape}")
    eps = inputs[:, 0]
    eps_p_old = inputs[:, 1]
    xi_p_old = inputs[:, 2]
    out_eps_p = np.asarray(out_eps_p, dtype=float).reshape(-1)
    out_xi_p = np.asarray(out_xi_p, dtype=float).reshape(-1)

    sigma_tr = p.E * (eps - eps_p_old)
    phi_tr = np.abs(sigma_tr) - (p.sigma_y0 + p.h1 * (1.0 - np.exp(-p.h2 * xi_p_old)))
    gate_el = _switch(switch, -phi_tr, r)
    gate_pl = _switch(switch, phi_tr, r)

    sigma_new = p.E * (eps - out_eps_p)
    sgn_hard = np.where(sigma_new >= 0.0, 1.0, -1.0)
    sgn_new = _sign_fn(sign_mode, sigma_new, r)
    dsgn_new = _sign_fn_prime(sign_mode, sigma_new, r)
    hard_new = p.h1 * p.h2 * np.exp(-p.h2 * out_xi_p)
    phi_new = np.abs(sigma_new) - (p.sigma_y0 + p.h1 * (1.0 - np.exp(-p.h2 * out_xi_p)))
    gate_phi_new = _switch_prime(switch, phi_new, r)

    d_eps = out_eps_p - eps_p_old
    d_xi = out_xi_p - xi_p_old

    residuals = {
        "ue": d_eps * gate_el,
        "ux": d_xi * gate_el,
        "ev": (d_eps - d_xi * sgn_new) * gate_pl,
        "yl": phi_new * gate_pl,
        "ke": _switch(switch, phi_new, r),
        "ky": _switch(switch, -d_xi, r),
    }
    partials1 = {  # w.r.t. out_eps_p
        "ue": gate_el,
        "ev": (1.0 + p.E * d_xi * dsgn_new) * gate_pl,
        "yl": -p.E * sgn_hard * gate_pl,
        "ke": -p.E * sgn_hard * gate_phi_new,
    }
    partials2 = {  # w.r.t. out_xi_p
        "ux": gate_el,
        "ev": -sgn_new * gate_pl,
        "yl": -hard_new * gate_pl,
        "ke": -hard_new * gate_phi_new,
        "ky": -_switch_prime(switch, -d_xi, r),
    }
    return _assemble(residuals, partials1, partials2, weights)


# --------------------------------------------------------------------------
# damage (1D and 3D share the residual structure through q_top = g.K.g)
# --------------------------------------------------------------------------

def _damage_terms_from_qtop(q_top, d_old, xi_old, out_d, out_xi, p, weights,
                            switch, r):
    phi_tr = (1.0 - d_old) * q_top - (p.Y0 + p.h1 * (1.0 - np.exp(-p.h2 * xi_old)))
    gate_el = _switch(switch, -phi_tr, r)
    gate_pl = _switch(switch, phi_tr, r)

    hard_new = p.h1 * p.h2 * np.exp(-p.h2 * out_xi)
    phi_new = (1.0 - out_d) * q_top - (p.Y0 + p.h1 * (1.0 - np.exp(-p.h2 * out_xi)))
    gate_phi_new = _switch_prime(switch, phi_new, r)

    d_d = out_d - d_old
    d_xi = out_xi - xi_old

    residuals = {
        "ue": d_d * gate_el,
        "ux": d_xi * gate_el,
        "ev": (d_d - d_xi) * gate_pl,
        "yl": phi_new * gate_pl,
        "ke": _switch(switch, phi_new, r),
        "ky": _switch(switch, -d_xi, r),
    }
    partials1 = {  # w.r.t. out_d
        "ue": gate_el,
        "ev": gate_pl,
        "yl": -q_top * gate_pl,
        "ke": -q_top * gate_phi_new,
    }
    partials2 = {  # w.r.t. out_xi
        "ux": gate_el,
        "ev": -gate_pl,
        "yl": -hard_new * gate_pl,
        "ke": -hard_new * gate_phi_new,
        "ky": -_switch_prime(switch, -d_xi, r),
    }
    return _assemble(residuals, partials1, partials2, weights)


def damage_loss_terms(inputs, out_d, out_xi, p, weights=UNIT_WEIGHTS,
                      switch="relu", r=300.0):
    """Loss terms for raw 1D damage outputs; inputs rows (g, d_old, xi_old)."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != 3:
        raise DimensionMismatchError(f"expected (n, 3) inputs, got {inputs.shape}")
    g = inputs[:, 0]
    q_top = (p.K * g) * g
    return _damage_terms_from_qtop(
        q_top, inputs[:, 1], inputs[:, 2],
        np.asarray(out_d, dtype=float).reshape(-1),
        np.asarray(out_xi, dtype=float).reshape(-1),
        p, weights, switch, r)


def cz3d_loss_terms(inputs, out_d, out_xi, p, weights=UNIT_WEIGHTS,
                    switch="relu", r=300.0):
    """Loss terms for raw 3D outputs; inputs rows (g_s1, g_s2, g_n, d, xi)."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != 5:
        raise DimensionMismatchError(f"expected (n, 5) inputs, got {inputs.shape}")
    kd = p.stiffness_diag()
    gaps = inputs[:, 0:3]
    q_top = np.einsum("ni,i,ni->n", gaps, kd, gaps)
    return _damage_terms_from_qtop(
        q_top, inputs[:, 3], inputs[:, 4],
        np.asarray(out_d, dtype=float).reshape(-1),
        np.asarray(out_xi, dtype=float).reshape(-1),
        p, weights, switch, r)


# --------------------------------------------------------------------------
# wrappers evaluating a pair of networks
# --------------------------------------------------------------------------

_TERM_FNS = {
    "plasticity": plastic_loss_terms,
    "damage": damage_loss_terms,
    "cz3d": cz3d_loss_terms,
}


def _net_losses(task, batch, nets, p, weights, switch, sign_mode, r, want_grads):
    net1, net2 = nets
    out1, cache1 = forward_batch(net1, batch)
    out2, cache2 = forward_batch(net2, batch)
    if task == "plasticity":
        report, g1, g2 = plastic_loss_terms(
            batch, out1[:, 0], out2[:, 0], p, weights, switch, sign_mode, r)
    else:
        report, g1, g2 = _TERM_FNS[task](batch, out1[:, 0], out2[:, 0], p, weights, switch, r)
    if not want_grads:
        return report
    grads1 = backprop(net1, cache1, g1[:, None])
    grads2 = backprop(net2, cache2, g2[:, None])
    return report, (grads1, grads2)


def plastic_losses(batch, nets, p, weights=UNIT_WEIGHTS, switch="relu",
                   sign_mode="hard", r=300.0, want_grads=False):
    """Physics losses of the plasticity surrogate pair on a batch.

    ``nets`` is the (eps_p, xi_p) network pair; with ``want_grads`` the
    parameter gradients of the weighted total are returned alongside.
    """
    return _net_losses("plasticity", batch, nets, p, weights, switch,
                       sign_mode, r, want_grads)


def damage_losses(batch, nets, p, weights=UNIT_WEIGHTS, switch="relu",
                  r=300.0, want_grads=False):
    """Physics losses of the 1D damage surrogate pair on a batch."""
    return _net_losses("damage", batch, nets, p, weights, switch, "hard",
                       r, want_grads)


def cz3d_losses(batch, nets, p, weights=UNIT_WEIGHTS, switch="relu",
                r=300.0, want_grads=False):
    """Physics losses of the 3D cohesive-zone surrogate pair on a batch."""
    return _net_losses("cz3d", batch, nets, p, weights, switch, "hard",
                       r, want_grads)


def data_loss(batch, labels, nets, want_grads=False):
    """Plain supervised loss against solver-generated labels.

    ``labels`` holds one column per network output (updated internal
    variables from the reference integrator).  The value is the sum of
    the two per-variable mean squared errors.
    """
    if labels is None:
        raise MissingLabelsError("data loss requires solver-generated labels")
    labels = np.asarray(labels, dtype=float)
    batch = np.asarray(batch, dtype=float)
    if labels.ndim != 2 or labels.shape[1] != 2 or labels.shape[0] != batch.shape[0]:
        raise MissingLabelsError(
            f"labels must be (n, 2) matching the batch, got {labels.shape}")
    net1, net2 = nets
    out1, cache1 = forward_batch(net1, batch)
    out2, cache2 = forward_batch(net2, batch)
    n = batch.shape[0]
    res1 = out1[:, 0] - labels[:, 0]
    res2 = out2[:, 0] - labels[:, 1]
    value = float(np.mean(res1 * res1) + np.mean(res2 * res2))
    if not want_grads:
        return value
    grads1 = backprop(net1, cache1, (2.0 / n) * res1[:, None])
    grads2 = backprop(net2, cache2, (2.0 / n) * res2[:, None])
    return value, (grads1, grads2)
