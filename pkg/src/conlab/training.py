"""Training loops: physics-only, data-driven, and the two-phase ODE demo.

``train`` runs minibatch Adam on one of the physics loss assemblies (or
on the supervised data loss).  Batching is an epoch-level shuffle
without replacement from a generator seeded by the config, so repeated
runs are bit-identical.  The recorded history holds, per epoch, the
mean of the weighted batch losses seen during that epoch.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import MissingLabelsError
from .losses import (
    LossReport,
    LossWeights,
    UNIT_WEIGHTS,
    cz3d_losses,
    damage_losses,
    data_loss,
    plastic_losses,
)
from .materials import PlasticState
from .network import (
    Network,
    TrainingConfig,
    adam_init,
    adam_update,
    backprop,
    backprop_with_tangent,
    forward_batch,
    forward_with_input_tangent,
    init_network,
)
from .paths import make_loading_path
from .solvers import DEFAULT_SOLVER, solve_plastic_step

__all__ = [
    "TASKS",
    "make_task_nets",
    "train",
    "generate_plastic_labels",
    "ode_demo_target",
    "train_ode_demo",
    "OdeDemoResult",
]

TASKS = ("plasticity", "damage", "cz3d", "data_driven")

# Output-variable names per task, used for checkpoints and reporting.
TASK_OUTPUTS = {
    "plasticity": ("eps_p", "xi_p"),
    "damage": ("d", "xi_d"),
    "cz3d": ("d", "xi_d"),
    "data_driven": ("eps_p", "xi_p"),
}


def make_task_nets(task, hidden_layers, width, hidden_activation="relu", seed=0,
                   swish_r=1.0):
    """One single-output network per internal variable of the task."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}, expected one of {TASKS}")
    n_inputs = 5 if task == "cz3d" else 3
    sizes = [n_inputs] + [width] * hidden_layers + [1]
    return (
        init_network(sizes, hidden_activation, seed=seed, swish_r=swish_r),
        init_network(sizes, hidden_activation, seed=seed + 1, swish_r=swish_r),
    )


def _batch_loss(task, batch, nets, params, weights, switch, sign_mode, r, labels):
    if task == "plasticity":
        return plastic_losses(batch, nets, params, weights, switch, sign_mode,
                              r, want_grads=True)
    if task == "damage":
        return damage_losses(batch, nets, params, weights, switch, r, want_grads=True)
    if task == "cz3d":
        return cz3d_losses(batch, nets, params, weights, switch, r, want_grads=True)
    value, grads = data_loss(batch, labels, nets, want_grads=True)
    zero = 0.0
    return LossReport(ue=zero, ux=zero, ev=zero, yl=zero, ke=zero, ky=zero,
                      total=value), grads


def train(task, collocation, weights, cfg, nets, params=None, switch="relu",
          sign_mode="hard", labels=None):
    """Minibatch Adam over a collocation set.

    Parameters
    ----------
    task : one of ``TASKS``
    collocation : (n, k) array of admissible input rows
    weights : LossWeights (ignored by the data-driven task)
    cfg : TrainingConfig
    nets : pair of Networks, one per internal variable
    params : material parameter set (None only for data_driven)
    switch, sign_mode : loss switch selection, see :mod:`conlab.losses`
    labels : (n, 2) solver outputs, required by the data-driven task

    Returns
    -------
    (nets, history) : the trained network pair and one LossReport per
    epoch (mean of the weighted batch losses).

    Raises
    ------
    MissingLabelsError for a data-driven run without labels, and
    RuntimeError with epoch/batch diagnostics if the loss goes
    non-finite.
    """
    collocation = np.asarray(collocation, dtype=float)
    if collocation.ndim != 2 or collocation.shape[0] == 0:
        raise ValueError("collocation set must be a non-empty 2D array")
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}, expected one of {TASKS}")
    if task == "data_driven":
        if labels is None:
            raise MissingLabelsError("data-driven training requires labels")
        labels = np.asarray(labels, dtype=float)
    if task != "data_driven" and params is None:
        raise ValueError("physics training requires material parameters")

    nets = list(nets)
    opt_states = [adam_init(net) for net in nets]
    rng = np.random.default_rng(cfg.seed)
    n_rows = collocation.shape[0]
    history: List[LossReport] = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(n_rows)
        sums = np.zeros(7)
        n_batches = 0
        for start in range(0, n_rows, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch = collocation[idx]
            batch_labels = labels[idx] if labels is not None else None
            report, grads = _batch_loss(task, batch, nets, params, weights,
                                        switch, sign_mode, cfg.smoothing_r,
                                        batch_labels)
            if not math.isfinite(report.total):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {n_batches} "
                    f"(total={report.total}); check ranges and learning rate")
            for i in (0, 1):
                nets[i], opt_states[i] = adam_update(nets[i], grads[i],
                                                     opt_states[i], cfg)
            sums += np.array([report.ue, report.ux, report.ev, report.yl,
                              report.ke, report.ky, report.total])
            n_batches += 1
        means = sums / n_batches
        history.append(LossReport(ue=means[0], ux=means[1], ev=means[2],
                                  yl=means[3], ke=means[4], ky=means[5],
                                  total=means[6], epoch=epoch))
    return tuple(nets), history


# --------------------------------------------------------------------------
# labelled data generation for the data-driven baseline
# --------------------------------------------------------------------------

def generate_plastic_labels(params, n_amplitudes=25, n_frequencies=25,
                            amplitude_range=(0.2, 1.0), frequency_range=(1.0, 5.0),
                            dt=0.01, strain_cap=1.0, solver_cfg=DEFAULT_SOLVER):
    """Labelled step data from the return-mapping solver.

    Runs a family of loading paths A*|t*sin(w*pi*t)| (capped at
    ``strain_cap``) over t in [0, 1] and records, for every step, the
    solver inputs (eps_next, eps_p_old, xi_p_old) and outputs
    (eps_p_new, xi_p_new).  The default 25x25 grid at dt=0.01 yields
    62,500 labelled rows.
    """
    amps = np.linspace(*amplitude_range, n_amplitudes)
    freqs = np.linspace(*frequency_range, n_frequencies)
    n_steps = int(round(1.0 / dt))
    inputs = []
    labels = []
    for amp in amps:
        for freq in freqs:
            path = make_loading_path(
                {"clip_max": strain_cap,
                 "of": {"family": "tsin", "amplitude": amp, "omega": freq}},
                n_steps=n_steps)
            state = PlasticState()
            for eps in path.values[1:]:
                result = solve_plastic_step(float(eps), state, params, solver_cfg)
                inputs.append((float(eps), state.eps_p, state.xi_p))
                labels.append((result.state.eps_p, result.state.xi_p))
                state = result.state
    return np.array(inputs), np.array(labels)


# --------------------------------------------------------------------------
# two-phase demo: fit data first, then enforce the governing ODE
# --------------------------------------------------------------------------

def ode_demo_target(x):
    """Reference curve of the demo: sin(x) + 0.1*x + 0.1."""
    return np.sin(x) + 0.1 * np.asarray(x, dtype=float) + 0.1


def _ode_demo_rhs(x):
    # First derivative of the target, used as the governing equation.
    return np.cos(x) + 0.1


@dataclass
class OdeDemoResult:
    net: Network
    net_after_data: Network
    history_data: List[float]
    history_physics: List[float]


def train_ode_demo(epochs_data=500, epochs_physics=500, n_data=50, n_collocation=50,
                   data_interval=(0.0, 2.0), physics_interval=(0.0, 5.0),
                   hidden_layers=4, width=20, learning_rate=1e-2, seed=1):
    """Fit sample data on a subinterval, then retrain on the governing ODE.

    Phase 1 regresses the target on ``n_data`` samples of
    ``data_interval`` only; the net matches there and drifts outside.
    Phase 2 keeps the same network and trains the residual of
    y' = cos(x) + 0.1 on collocation points covering
    ``physics_interval`` plus the two boundary anchors y(0)=0.1 and
    y(5)=-0.358, which extends validity to the whole interval.

    Returns an :class:`OdeDemoResult` with the final net, a copy taken
    after phase 1, and the per-epoch loss histories.
    """
    net = init_network([1] + [width] * hidden_layers + [1], "tanh", seed=seed)
    cfg = TrainingConfig(learning_rate=learning_rate, epochs=epochs_data,
                         batch_size=n_data, seed=seed)

    x_data = np.linspace(*data_interval, n_data)[:, None]
    y_data = ode_demo_target(x_data[:, 0])[:, None]
    history_data = []
    opt = adam_init(net)
    for _ in range(epochs_data):
        out, cache = forward_batch(net, x_data)
        res = out - y_data
        grads = backprop(net, cache, (2.0 / n_data) * res)
        net, opt = adam_update(net, grads, opt, cfg)
        history_data.append(float(np.mean(res * res)))
    net_after_data = net.copy()

    # Phase 2: ODE residual on the wide interval plus boundary anchors.
    # Collocation rows contribute through the cotangent of y', the two
    # boundary rows through that of y.
    x_col = np.linspace(*physics_interval, n_collocation)[:, None]
    rhs = _ode_demo_rhs(x_col[:, 0])[:, None]
    x_bc = np.array([[physics_interval[0]], [physics_interval[1]]])
    y_bc = np.array([[0.1], [-0.358]])
    history_physics = []
    opt = adam_init(net)
    n_c = n_collocation
    for _ in range(epochs_physics):
        _, dout_c, cache_c = forward_with_input_tangent(net, x_col)
        res_ode = dout_c - rhs
        grads_c = backprop_with_tangent(net, cache_c, np.zeros_like(rhs),
                                        (2.0 / n_c) * res_ode)
        out_b, cache_b = forward_batch(net, x_bc)
        res_bc = out_b - y_bc
        grads_b = backprop(net, cache_b, 2.0 * res_bc)
        grads = ([gc + gb for gc, gb in zip(grads_c[0], grads_b[0])],
                 [gc + gb for gc, gb in zip(grads_c[1], grads_b[1])])
        net, opt = adam_update(net, grads, opt, cfg)
        history_physics.append(float(np.mean(res_ode * res_ode) + np.sum(res_bc * res_bc)))

    return OdeDemoResult(net=net, net_after_data=net_after_data,
                         history_data=history_data,
                         history_physics=history_physics)
