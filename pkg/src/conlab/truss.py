"""Small-deformation 2D truss solver with pluggable 1D material backends.

Bars carry axial force only, with linear shape functions: the element
strain is the axial elongation over the initial length.  Each load
increment runs a global Newton iteration on the free degrees of
freedom; element forces and consistent tangents come from whichever
material backend is plugged in (return mapping or a trained surrogate),
always advanced from the state committed at the previous increment.

The shipped demo geometry is a parametric cantilever: a strip of square
bays with crossing diagonals, clamped at the left edge and driven by a
prescribed vertical displacement of the right edge, loaded and then
fully unloaded.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import GlobalNonConvergenceError, SingularSystemError

__all__ = [
    "Truss",
    "FeConfig",
    "FeResult",
    "fe_solve",
    "make_cantilever_truss",
    "loading_unloading_factors",
]


@dataclass
class Truss:
    """Geometry, topology and load program of a plane truss.

    nodes : (n_nodes, 2) coordinates [mm]
    elements : (n_el, 2) node index pairs
    areas : (n_el,) cross sections [mm^2]
    fixed_dofs : DOF indices held at zero (dof = 2*node + component)
    driven_dofs : DOF indices with a prescribed displacement
    driven_values : peak prescribed displacement per driven DOF [mm]
    forces : optional (2*n_nodes,) peak nodal force vector [N]
    """

    nodes: np.ndarray
    elements: np.ndarray
    areas: np.ndarray
    fixed_dofs: List[int]
    driven_dofs: List[int]
    driven_values: np.ndarray
    forces: Optional[np.ndarray] = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        self.areas = np.asarray(self.areas, dtype=float)
        self.driven_values = np.asarray(self.driven_values, dtype=float)
        n_nodes = len(self.nodes)
        if self.elements.size and (self.elements.min() < 0 or self.elements.max() >= n_nodes):
            raise ValueError("element connectivity references unknown nodes")
        if len(self.areas) != len(self.elements):
            raise ValueError("one cross-section area per element required")
        if len(self.driven_values) != len(self.driven_dofs):
            raise ValueError("one peak value per driven DOF required")

    @property
    def n_dofs(self):
        return 2 * len(self.nodes)


@dataclass(frozen=True)
class FeConfig:
    """Global Newton settings and increment count per load phase."""

    tol: float = 1e-8
    max_iter: int = 25
    n_increments: int = 100


@dataclass
class FeResult:
    """Histories over all load increments (index 0 is the unloaded start)."""

    factors: np.ndarray
    displacements: np.ndarray      # (m, n_dofs)
    reactions: np.ndarray          # (m, n_constrained) on fixed+driven DOFs
    constrained_dofs: List[int]
    element_strains: np.ndarray    # (m, n_el)
    element_forces: np.ndarray     # (m, n_el) stress per element
    element_states: np.ndarray     # (m, n_el, 2)
    iterations: np.ndarray         # (m,)


def loading_unloading_factors(n_increments=100, peak=1.0):
    """Load factors 0 -> peak -> 0 with n_increments per phase."""
    up = np.linspace(0.0, peak, n_increments + 1)
    down = np.linspace(peak, 0.0, n_increments + 1)[1:]
    return np.concatenate([up, down])


def _element_geometry(truss):
    xi = truss.nodes[truss.elements[:, 0]]
    xj = truss.nodes[truss.elements[:, 1]]
    vec = xj - xi
    lengths = np.linalg.norm(vec, axis=1)
    if np.any(lengths <= 0.0):
        raise ValueError("zero-length element in truss")
    dirs = vec / lengths[:, None]
    return lengths, dirs


def fe_solve(truss, backend, cfg=FeConfig(), factors=None):
    """Incremental solve of the truss with the given material backend.

    ``backend`` provides ``initial_state()`` and ``step(strain, state)``
    returning force (axial stress), consistent tangent and the updated
    state; one state per element is committed after each converged
    increment.  ``factors`` scales the prescribed displacements (and
    forces, if any); the default is a full loading/unloading cycle.

    Raises GlobalNonConvergenceError (with the failing step) or
    SingularSystemError for an under-constrained structure.
    """
    if factors is None:
        factors = loading_unloading_factors(cfg.n_increments)
    factors = np.asarray(factors, dtype=float)

    n_dofs = truss.n_dofs
    n_el = len(truss.elements)
    lengths, dirs = _element_geometry(truss)
    # DOF bookkeeping: constrained = fixed + driven, rest is free.
    constrained = list(dict.fromkeys(list(truss.fixed_dofs) + list(truss.driven_dofs)))
    # A fully prescribed structure is legal: the Newton loop then only
    # evaluates elements and reactions.
    free = np.array([i for i in range(n_dofs) if i not in set(constrained)], dtype=int)
    dof_map = truss.elements.repeat(2, axis=1) * 2
    dof_map[:, 1] += 1
    dof_map[:, 3] += 1  # columns: (ix, iy, jx, jy)

    states = [backend.initial_state() for _ in range(n_el)]
    u = np.zeros(n_dofs)

    m = len(factors)
    res = FeResult(
        factors=factors,
        displacements=np.zeros((m, n_dofs)),
        reactions=np.zeros((m, len(constrained))),
        constrained_dofs=constrained,
        element_strains=np.zeros((m, n_el)),
        element_forces=np.zeros((m, n_el)),
        element_states=np.zeros((m, n_el, 2)),
        iterations=np.zeros(m, dtype=int),
    )

    ext_forces = truss.forces if truss.forces is not None else np.zeros(n_dofs)

    for step_idx, factor in enumerate(factors):
        u[list(truss.fixed_dofs)] = 0.0
        u[list(truss.driven_dofs)] = factor * truss.driven_values
        f_ext = factor * ext_forces

        step_results = [None] * n_el
        converged = step_idx == 0 and np.allclose(factors[0], 0.0)
        iterations = 0
        res_norm = np.inf
        for iteration in range(cfg.max_iter + 1):
            f_int = np.zeros(n_dofs)
            k_global = np.zeros((n_dofs, n_dofs))
            for e in range(n_el):
                edofs = dof_map[e]
                du = u[edofs[2:]] - u[edofs[:2]]
                strain = float(dirs[e] @ du) / lengths[e]
                step = backend.step(strain, states[e])
                step_results[e] = (strain, step)
                b_vec = np.concatenate([-dirs[e], dirs[e]])
                f_int[edofs] += truss.areas[e] * step.force * b_vec
                k_e = (truss.areas[e] * step.tangent / lengths[e]) * np.outer(b_vec, b_vec)
                k_global[np.ix_(edofs, edofs)] += k_e
            residual = f_int - f_ext
            scale = max(1.0, float(np.max(np.abs(f_int))) if n_el else 1.0)
            res_norm = (float(np.linalg.norm(residual[free])) / scale
                        if len(free) else 0.0)
            if not np.isfinite(res_norm):
                break
            if res_norm <= cfg.tol:
                converged = True
                break
            if iteration == cfg.max_iter:
                break
            k_ff = k_global[np.ix_(free, free)]
            try:
                du_free = np.linalg.solve(k_ff, residual[free])
            except np.linalg.LinAlgError as exc:
                raise SingularSystemError(
                    f"singular stiffness at step {step_idx}: {exc}") from exc
            if not np.all(np.isfinite(du_free)):
                raise SingularSystemError(
                    f"stiffness at step {step_idx} is numerically singular")
            u[free] -= du_free
            iterations += 1
        if not converged:
            raise GlobalNonConvergenceError(
                f"no equilibrium at step {step_idx} (factor {factor:.4g}), "
                f"residual {res_norm:.3e}",
                step=step_idx, residual_norm=res_norm)

        # Commit element states and record the step.
        for e, (strain, step) in enumerate(step_results):
            states[e] = step.state
            res.element_strains[step_idx, e] = strain
            res.element_forces[step_idx, e] = step.force
            if hasattr(step.state, "eps_p"):
                res.element_states[step_idx, e] = (step.state.eps_p, step.state.xi_p)
            else:
                res.element_states[step_idx, e] = (step.state.d, step.state.xi_d)
        f_int = np.zeros(n_dofs)
        for e in range(n_el):
            strain, step = step_results[e]
            edofs = dof_map[e]
            b_vec = np.concatenate([-dirs[e], dirs[e]])
            f_int[edofs] += truss.areas[e] * step.force * b_vec
        res.displacements[step_idx] = u
        res.reactions[step_idx] = f_int[constrained] - f_ext[constrained]
        res.iterations[step_idx] = iterations
    return res


def make_cantilever_truss(n_bays=2, bay=1.0, height=1.0, area=1.0, tip_drop=2.0):
    """Parametric cantilever strip: clamped left edge, driven right edge.

    Bottom and top chords, verticals and one diagonal per bay.  Both
    right-edge nodes are driven downward by ``tip_drop`` at full load.
    The defaults take several members past yield (in both senses) for
    the reference material scale while keeping every element strain
    inside the surrogate training range [-1, 1].
    """
    nodes = []
    for i in range(n_bays + 1):
        nodes.append((i * bay, 0.0))
        nodes.append((i * bay, height))
    nodes = np.array(nodes)

    def bottom(i):
        return 2 * i

    def top(i):
        return 2 * i + 1

    elements = []
    for i in range(n_bays):
        elements.append((bottom(i), bottom(i + 1)))
        elements.append((top(i), top(i + 1)))
        elements.append((bottom(i + 1), top(i + 1)))
        # Alternating diagonals keep the strip shear-stiff both ways.
        if i % 2 == 0:
            elements.append((bottom(i), top(i + 1)))
        else:
            elements.append((top(i), bottom(i + 1)))
    elements.append((bottom(0), top(0)))
    elements = np.array(elements, dtype=int)

    fixed = [2 * bottom(0), 2 * bottom(0) + 1, 2 * top(0), 2 * top(0) + 1]
    driven = [2 * bottom(n_bays) + 1, 2 * top(n_bays) + 1]
    driven_values = np.array([-tip_drop, -tip_drop])
    return Truss(nodes=nodes, elements=elements,
                 areas=np.full(len(elements), float(area)),
                 fixed_dofs=fixed, driven_dofs=driven,
                 driven_values=driven_values)
