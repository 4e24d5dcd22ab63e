"""Closed-loop trajectory evaluation for any constitutive backend.

A backend exposes ``initial_state()`` and ``step(load, state)`` and is
otherwise stateless, so the same object can serve many paths (also
concurrently).  ``run_path`` drives it along a :class:`LoadingPath`
feeding each predicted state into the next step, exactly how a material
routine is exercised inside a structural solve.  The network backends
compute forces and tangents from the analytic energy expressions with
only the internal-variable update (and its input Jacobian) coming from
the trained networks.

``compare`` implements the point-wise percentage error against a
reference trajectory, skipping points whose reference force is
numerically zero rather than diluting the metric with an epsilon.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LengthMismatchError
from .materials import (
    DamageState,
    PlasticState,
    cz3d_response,
    damage_response,
    dissipation_increment,
    plastic_response,
    sign,
    voce_energy,
)
from .network import activation, forward, input_jacobian
from .paths import make_loading_path
from .solvers import (
    DEFAULT_SOLVER,
    StepResult,
    explicit_damage_step,
    solve_cz3d_step,
    solve_damage_step,
    solve_plastic_step,
)

__all__ = [
    "Trajectory",
    "ErrorStats",
    "ImplicitPlasticityBackend",
    "ImplicitDamageBackend",
    "ImplicitCz3dBackend",
    "ExplicitDamageBackend",
    "NetworkPlasticityBackend",
    "NetworkDamageBackend",
    "NetworkCz3dBackend",
    "run_path",
    "compare",
    "compare_against_times",
    "benchmark",
    "timestep_study",
]


@dataclass
class Trajectory:
    """Per-step records of one closed-loop run.

    All arrays have length n_steps + 1 including the initial point;
    ``states`` holds (eps_p, xi_p) or (d, xi_d) column pairs and
    ``dissipation`` the per-step increments (zero at the start).
    """

    model: str
    times: np.ndarray
    loads: np.ndarray
    forces: np.ndarray
    states: np.ndarray
    tangents: np.ndarray
    psis: np.ndarray
    dissipation: np.ndarray
    walltimes: np.ndarray

    def state_at(self, i):
        if self.model == "plasticity":
            return PlasticState(eps_p=self.states[i, 0], xi_p=self.states[i, 1])
        return DamageState(d=self.states[i, 0], xi_d=self.states[i, 1])


@dataclass
class ErrorStats:
    """Point-wise percentage errors against a reference trajectory."""

    mean_pct: float
    max_pct: float
    per_point: np.ndarray
    n_excluded: int


# --------------------------------------------------------------------------
# classical backends
# --------------------------------------------------------------------------

class ImplicitPlasticityBackend:
    """Return-mapping elastoplasticity."""

    model = "plasticity"
    dim = 1

    def __init__(self, params, cfg=DEFAULT_SOLVER):
        self.params = params
        self.cfg = cfg

    def initial_state(self):
        return PlasticState()

    def step(self, load, state):
        return solve_plastic_step(load, state, self.params, self.cfg)


class ImplicitDamageBackend:
    """Return-mapping 1D interface damage."""

    model = "damage"
    dim = 1

    def __init__(self, params, cfg=DEFAULT_SOLVER):
        self.params = params
        self.cfg = cfg

    def initial_state(self):
        return DamageState()

    def step(self, load, state):
        return solve_damage_step(load, state, self.params, self.cfg)


class ImplicitCz3dBackend:
    """Return-mapping 3D cohesive zone."""

    model = "cz3d"
    dim = 3

    def __init__(self, params, cfg=DEFAULT_SOLVER):
        self.params = params
        self.cfg = cfg

    def initial_state(self):
        return DamageState()

    def step(self, load, state):
        return solve_cz3d_step(load, state, self.params, self.cfg)


class ExplicitDamageBackend:
    """Single-pass damage update, 1D or 3D depending on the parameter set."""

    def __init__(self, params, dim=1):
        self.params = params
        self.dim = dim
        self.model = "damage" if dim == 1 else "cz3d"

    def initial_state(self):
        return DamageState()

    def step(self, load, state):
        return explicit_damage_step(load, state, self.params)


# --------------------------------------------------------------------------
# network backends
# --------------------------------------------------------------------------

class NetworkPlasticityBackend:
    """Trained surrogate for the plasticity update.

    The networks only deliver the new internal variables; stress comes
    from E*(eps - eps_p) and the tangent from E*(1 - d eps_p/d eps)
    with the network's input Jacobian.  ``with_tangent=False`` skips
    the Jacobian, which is the deployment-cost setting the runtime
    benchmark measures (a forward evaluation per step and nothing
    else).

    ``fold_negative`` enables the odd extension of the 1D law: inputs
    are mirrored into the non-negative training range, the predicted
    plastic strain is mirrored back.  This lets a surrogate trained on
    tension-only collocation serve compressed members, as long as each
    material point keeps a single loading sense (monotone load and
    unload, no full reversal).
    """

    model = "plasticity"
    dim = 1

    def __init__(self, nets, params, fold_negative=False, with_tangent=True):
        self.nets = tuple(nets)
        self.params = params
        self.fold_negative = fold_negative
        self.with_tangent = with_tangent
        self._eval = _PairEval(self.nets)

    def initial_state(self):
        return PlasticState()

    def step(self, load, state):
        fold = 1.0
        if self.fold_negative:
            fold = sign(state.eps_p) if abs(state.eps_p) > 1e-12 else sign(load)
        x = np.array([fold * load, fold * state.eps_p, state.xi_p])
        out_ep, xi_p = self._eval(x)
        eps_p = fold * out_ep
        state_next = PlasticState(eps_p=eps_p, xi_p=xi_p)
        resp = plastic_response(load, state_next, self.params)
        if self.with_tangent:
            # d eps_p/d eps is fold-invariant: both input and output mirror.
            jac = input_jacobian(self.nets[0], x)[0, 0]
            tangent = self.params.E * (1.0 - jac)
        else:
            tangent = self.params.E
        return StepResult(force=resp.force, state=state_next, tangent=tangent,
                          delta_lambda=xi_p - state.xi_p, iterations=0, psi=resp.psi)


class NetworkDamageBackend:
    """Trained surrogate for the 1D interface damage update."""

    model = "damage"
    dim = 1

    def __init__(self, nets, params, with_tangent=True):
        self.nets = tuple(nets)
        self.params = params
        self.with_tangent = with_tangent
        self._eval = _PairEval(self.nets)

    def initial_state(self):
        return DamageState()

    def step(self, load, state):
        x = np.array([load, state.d, state.xi_d])
        d, xi_d = self._eval(x)
        state_next = DamageState(d=d, xi_d=xi_d)
        resp = damage_response(load, state_next, self.params)
        p = self.params
        tangent = (1.0 - d) ** 2 * p.K
        if self.with_tangent:
            jac = input_jacobian(self.nets[0], x)[0, 0]
            tangent = tangent - 2.0 * (1.0 - d) * p.K * load * jac
        return StepResult(force=resp.force, state=state_next, tangent=tangent,
                          delta_lambda=xi_d - state.xi_d, iterations=0, psi=resp.psi)


class NetworkCz3dBackend:
    """Trained surrogate for the 3D cohesive-zone update."""

    model = "cz3d"
    dim = 3

    def __init__(self, nets, params, with_tangent=True):
        self.nets = tuple(nets)
        self.params = params
        self.with_tangent = with_tangent
        self._kd = params.stiffness_diag()
        self._eval = _PairEval(self.nets)

    def initial_state(self):
        return DamageState()

    def step(self, load, state):
        load = np.asarray(load, dtype=float)
        x = np.empty(5)
        x[:3] = load
        x[3] = state.d
        x[4] = state.xi_d
        d, xi_d = self._eval(x)
        state_next = DamageState(d=d, xi_d=xi_d)
        kd = self._kd
        f_d = (1.0 - d) ** 2
        kg = kd * load
        q_top = float(kg @ load)
        psi = 0.5 * f_d * q_top + voce_energy(self.params.h1, self.params.h2, xi_d)
        tangent = f_d * np.diag(kd)
        if self.with_tangent:
            grad_d = input_jacobian(self.nets[0], x)[0, :3]
            tangent = tangent - 2.0 * (1.0 - d) * np.outer(kg, grad_d)
        return StepResult(force=f_d * kg, state=state_next, tangent=tangent,
                          delta_lambda=xi_d - state.xi_d, iterations=0, psi=psi)


def _eval_scalar(net, x):
    """Lean single-sample forward for the per-step hot path.

    Same arithmetic as :func:`conlab.network.forward`, minus argument
    checking and with in-place relu, which matters when a closed-loop
    run calls thousands of tiny evaluations.
    """
    z = x
    kind, r = net.hidden_activation, net.swish_r
    if kind == "relu":
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            u = w @ z
            u += b
            np.maximum(u, 0.0, out=u)
            z = u
    else:
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            z = activation(kind, w @ z + b, r)
    return float(net.weights[-1][0] @ z) + net.biases[-1][0]


class _PairEval:
    """One matrix pass per layer for a pair of same-shaped heads.

    The two single-output networks of a surrogate share input and
    hidden widths, so their layers can be stacked (first layer rows
    concatenated, deeper layers block-diagonal) and both internal
    variables come out of a single forward sweep.  Falls back to two
    separate sweeps when the shapes or activations differ.
    """

    def __init__(self, nets):
        a, b = nets
        self.nets = (a, b)
        self.fused = (a.layer_sizes == b.layer_sizes
                      and a.hidden_activation == b.hidden_activation
                      and a.swish_r == b.swish_r)
        if not self.fused:
            return
        self.kind = a.hidden_activation
        self.r = a.swish_r
        self.weights = [np.vstack([a.weights[0], b.weights[0]])]
        self.biases = [np.concatenate([a.biases[0], b.biases[0]])]
        for wa, wb, ba, bb in zip(a.weights[1:], b.weights[1:],
                                  a.biases[1:], b.biases[1:]):
            top = np.hstack([wa, np.zeros_like(wb)])
            bottom = np.hstack([np.zeros_like(wa), wb])
            self.weights.append(np.vstack([top, bottom]))
            self.biases.append(np.concatenate([ba, bb]))

    def __call__(self, x):
        if not self.fused:
            return _eval_scalar(self.nets[0], x), _eval_scalar(self.nets[1], x)
        z = x
        if self.kind == "relu":
            for w, b in zip(self.weights[:-1], self.biases[:-1]):
                u = w @ z
                u += b
                np.maximum(u, 0.0, out=u)
                z = u
        else:
            for w, b in zip(self.weights[:-1], self.biases[:-1]):
                z = activation(self.kind, w @ z + b, self.r)
        out = self.weights[-1] @ z + self.biases[-1]
        return out[0], out[1]


def _response(model, load, state, params):
    if model == "plasticity":
        return plastic_response(load, state, params)
    if model == "damage":
        return damage_response(load, state, params)
    return cz3d_response(load, state, params)


# --------------------------------------------------------------------------
# closed-loop runner
# --------------------------------------------------------------------------

def run_path(backend, path, initial_state=None):
    """Run a backend along a loading path, feeding states forward.

    Also evaluates the free energy and the explicit-quadrature
    dissipation increment of every step from the closed-form response
    functions, so all invariant checks can run on the records alone.
    """
    if backend.dim == 3 and not path.is_vector:
        raise LengthMismatchError("3D backend needs a 3-component loading path")
    if backend.dim == 1 and path.is_vector:
        raise LengthMismatchError("1D backend cannot run a vector path")
    params = backend.params
    model = backend.model
    state = backend.initial_state() if initial_state is None else initial_state
    m = len(path.times)

    loads = np.array(path.values, dtype=float)
    forces = np.zeros((m, 3)) if backend.dim == 3 else np.zeros(m)
    tangents = np.zeros((m, 3, 3)) if backend.dim == 3 else np.zeros(m)
    states = np.zeros((m, 2))
    psis = np.zeros(m)
    dissipation = np.zeros(m)
    walltimes = np.zeros(m)

    resp = _response(model, loads[0], state, params)
    forces[0] = resp.force
    psis[0] = resp.psi
    if model == "plasticity":
        states[0] = (state.eps_p, state.xi_p)
        tangents[0] = params.E
    else:
        states[0] = (state.d, state.xi_d)
        f_d = (1.0 - state.d) ** 2
        if backend.dim == 3:
            tangents[0] = f_d * np.diag(params.stiffness_diag())
        else:
            tangents[0] = f_d * params.K

    for i in range(1, m):
        state_prev = state
        tic = time.perf_counter()
        try:
            step = backend.step(loads[i], state)
        except Exception as exc:
            raise type(exc)(f"step {i} (t={path.times[i]:.6g}): {exc}") from exc
        walltimes[i] = time.perf_counter() - tic
        state = step.state
        forces[i] = step.force
        tangents[i] = step.tangent
        psis[i] = step.psi
        if model == "plasticity":
            states[i] = (state.eps_p, state.xi_p)
        else:
            states[i] = (state.d, state.xi_d)
        # Elastic-predictor forces (new load, old state) make the product
        # quadrature a discrete KKT statement; see dissipation_increment.
        trial_resp = _response(model, loads[i], state_prev, params)
        dissipation[i] = dissipation_increment(trial_resp, state_prev, state, model)

    return Trajectory(model=model, times=path.times.copy(), loads=loads,
                      forces=forces, states=states, tangents=tangents,
                      psis=psis, dissipation=dissipation, walltimes=walltimes)


# --------------------------------------------------------------------------
# point-wise comparison
# --------------------------------------------------------------------------

ZERO_REFERENCE = 1e-6


def _error_series(test_forces, ref_forces, component=None):
    test = np.asarray(test_forces, dtype=float)
    ref = np.asarray(ref_forces, dtype=float)
    if test.shape != ref.shape:
        raise LengthMismatchError(
            f"force records differ in shape: {test.shape} vs {ref.shape}")
    if test.ndim == 2:
        if component is None:
            diff = np.linalg.norm(test - ref, axis=1)
            mag = np.linalg.norm(ref, axis=1)
        else:
            diff = np.abs(test[:, component] - ref[:, component])
            mag = np.abs(ref[:, component])
    else:
        diff = np.abs(test - ref)
        mag = np.abs(ref)
    include = mag >= ZERO_REFERENCE
    errors = 100.0 * diff[include] / mag[include]
    n_excluded = int(np.size(mag) - np.count_nonzero(include))
    if errors.size == 0:
        return ErrorStats(mean_pct=0.0, max_pct=0.0, per_point=errors,
                          n_excluded=n_excluded)
    return ErrorStats(mean_pct=float(np.mean(errors)), max_pct=float(np.max(errors)),
                      per_point=errors, n_excluded=n_excluded)


def compare(traj_test, traj_ref, component=None):
    """Point-wise force error of a trajectory against a reference.

    err_i = |F_test - F_ref| / |F_ref| * 100 at every shared time
    point; reference magnitudes below 1e-6 are excluded and counted.
    Vector tractions compare by Euclidean norm unless a single
    ``component`` is selected.
    """
    if len(traj_test.times) != len(traj_ref.times):
        raise LengthMismatchError(
            f"trajectories differ in length: {len(traj_test.times)} vs {len(traj_ref.times)}")
    return _error_series(traj_test.forces, traj_ref.forces, component)


def compare_against_times(traj_test, traj_ref, component=None):
    """Like :func:`compare` but with the reference linearly interpolated
    onto the test trajectory's time grid (for mismatched step sizes)."""
    ref = traj_ref.forces
    if ref.ndim == 2:
        ref_interp = np.column_stack([
            np.interp(traj_test.times, traj_ref.times, ref[:, k])
            for k in range(ref.shape[1])])
    else:
        ref_interp = np.interp(traj_test.times, traj_ref.times, ref)
    return _error_series(traj_test.forces, ref_interp, component)


# --------------------------------------------------------------------------
# runtime and step-size studies
# --------------------------------------------------------------------------

def benchmark(backends, path, reps=3):
    """Median wall-time per backend over full closed-loop runs.

    Returns {name: time normalised to the fastest backend}.  Only the
    material update itself is timed (state feedback, force evaluation);
    nothing is recorded during the runs.  Absolute times are hardware
    noise, orderings are the result.
    """
    if reps < 3:
        raise ValueError("need at least 3 repetitions for a stable median")
    loads = path.values
    medians = {}
    for name, backend in backends.items():
        times = []
        for _ in range(reps):
            state = backend.initial_state()
            tic = time.perf_counter()
            for load in loads[1:]:
                state = backend.step(load, state).state
            times.append(time.perf_counter() - tic)
        medians[name] = float(np.median(times))
    fastest = min(medians.values())
    return {name: t / fastest for name, t in medians.items()}


def timestep_study(backend, path_spec, dt_list, ref_backend, ref_dt=0.001,
                   t_end=1.0, component=None):
    """Accuracy of a backend at several step sizes against a fine reference.

    The analytic path is resampled at every dt; the reference backend
    runs once at ``ref_dt`` and is interpolated onto each coarse grid.
    Returns a list of (dt, ErrorStats).
    """
    if not dt_list:
        raise ValueError("dt_list must not be empty")
    ref_path = make_loading_path(path_spec, n_steps=int(round(t_end / ref_dt)),
                                 t_end=t_end)
    ref_traj = run_path(ref_backend, ref_path)
    results = []
    for dt in dt_list:
        path = make_loading_path(path_spec, n_steps=int(round(t_end / dt)),
                                 t_end=t_end)
        traj = run_path(backend, path)
        results.append((dt, compare_against_times(traj, ref_traj, component)))
    return results
