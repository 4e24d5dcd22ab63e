"""Trajectory CSV export and re-import.

One row per recorded point.  Scalar models use the header

    time,load,force,<s1>,<s2>,tangent,psi,dissipation

with the state columns named per model (eps_p/xi_p or d/xi_d); the 3D
model fans load/force out into _s1/_s2/_n components and the tangent
into its nine entries t11..t33.  Floats print with 17 significant
digits so re-parsing reproduces the trajectory exactly.
"""

import csv

import numpy as np

from .driver import Trajectory
from .errors import IoFailureError

__all__ = ["trajectory_header", "export_trajectory_csv", "read_trajectory_csv"]

_STATE_COLUMNS = {
    "plasticity": ("eps_p", "xi_p"),
    "damage": ("d", "xi_d"),
    "cz3d": ("d", "xi_d"),
}


def trajectory_header(model):
    s1, s2 = _STATE_COLUMNS[model]
    if model == "cz3d":
        comps = ("s1", "s2", "n")
        return (["time"]
                + [f"load_{c}" for c in comps]
                + [f"force_{c}" for c in comps]
                + [s1, s2]
                + [f"tangent_{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
                + ["psi", "dissipation"])
    return ["time", "load", "force", s1, s2, "tangent", "psi", "dissipation"]


def _fmt(x):
    return format(float(x), ".17g")


def export_trajectory_csv(traj, path):
    """Write a trajectory to ``path``; raises IoFailureError on I/O problems."""
    header = trajectory_header(traj.model)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(len(traj.times)):
                row = [traj.times[i]]
                if traj.model == "cz3d":
                    row += list(traj.loads[i]) + list(traj.forces[i])
                    row += list(traj.states[i])
                    row += list(traj.tangents[i].ravel())
                else:
                    row += [traj.loads[i], traj.forces[i]]
                    row += list(traj.states[i])
                    row += [traj.tangents[i]]
                row += [traj.psis[i], traj.dissipation[i]]
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise IoFailureError(f"cannot write trajectory {path}: {exc}") from exc


def read_trajectory_csv(path):
    """Re-parse an exported trajectory (exact round trip)."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader]
    except OSError as exc:
        raise IoFailureError(f"cannot read trajectory {path}: {exc}") from exc
    data = np.array(rows)
    if header == trajectory_header("cz3d"):
        model = "cz3d"
    elif header == trajectory_header("plasticity"):
        model = "plasticity"
    elif header == trajectory_header("damage"):
        model = "damage"
    else:
        raise IoFailureError(f"{path} does not carry a known trajectory header")
    if model == "cz3d":
        return Trajectory(
            model=model, times=data[:, 0], loads=data[:, 1:4], forces=data[:, 4:7],
            states=data[:, 7:9], tangents=data[:, 9:18].reshape(-1, 3, 3),
            psis=data[:, 18], dissipation=data[:, 19],
            walltimes=np.zeros(len(data)))
    return Trajectory(
        model=model, times=data[:, 0], loads=data[:, 1], forces=data[:, 2],
        states=data[:, 3:5], tangents=data[:, 5], psis=data[:, 6],
        dissipation=data[:, 7], walltimes=np.zeros(len(data)))
