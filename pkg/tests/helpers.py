"""Shared test utilities: finite differences and independent oracles.

The oracles here deliberately avoid the code paths they check: scalar
bisection instead of Newton, plain difference quotients instead of the
analytic derivatives.
"""

import math

import numpy as np


def central_diff(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def rel_err(a, b, floor=1e-12):
    return abs(a - b) / max(abs(a), abs(b), floor)


def fd_close(value, fd, rel=1e-4, abs_tol=1e-7):
    """Relative agreement with an absolute floor for FD round-off noise.

    Central differences of O(1) quantities at h=1e-6 carry ~1e-10 of
    cancellation noise, so near-zero derivatives can only be compared
    absolutely.
    """
    return abs(value - fd) <= rel * max(abs(value), abs(fd)) + abs_tol


def bisect(fn, lo, hi, tol=1e-13, max_iter=200):
    """Plain bisection; fn(lo) and fn(hi) must bracket a root."""
    f_lo = fn(lo)
    f_hi = fn(hi)
    assert f_lo * f_hi <= 0.0, "bisection bracket does not contain a root"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if hi - lo < tol:
            return mid
        if f_lo * f_mid <= 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def plastic_xi_oracle(eps, state, p):
    """Bisection on the plastic consistency equation.

    At the converged state the flow direction is sgn of the trial
    stress s, eps_p = eps_p_old + (xi - xi_old)*s, and the yield
    condition reads s*E*(eps - eps_p) = sigma_y0 + q(xi).
    """
    s = 1.0 if p.E * (eps - state.eps_p) >= 0.0 else -1.0

    def residual(xi):
        eps_p = state.eps_p + (xi - state.xi_p) * s
        return s * p.E * (eps - eps_p) - (p.sigma_y0 + p.h1 * (1.0 - math.exp(-p.h2 * xi)))

    hi = state.xi_p + abs(eps - state.eps_p) + 1.0
    return bisect(residual, state.xi_p, hi)


def damage_d_oracle(q_top, state, p):
    """Bisection on the damage consistency equation for drive q_top = g.K.g."""

    def residual(d):
        xi = state.xi_d + (d - state.d)
        return (1.0 - d) * q_top - (p.Y0 + p.h1 * (1.0 - math.exp(-p.h2 * xi)))

    return bisect(residual, state.d, 1.0 - 1e-12)


def param_grad_fd(net, inputs, loss_value_fn, coords, h=1e-5):
    """Central-difference gradient of a scalar loss at selected coordinates.

    ``loss_value_fn(net)`` returns the loss; ``coords`` is a list of
    (kind, layer, index-tuple) with kind in {"w", "b"}.  Returns the FD
    gradient per coordinate.
    """
    grads = []
    for kind, layer, idx in coords:
        arr = net.weights[layer] if kind == "w" else net.biases[layer]
        orig = arr[idx]
        arr[idx] = orig + h
        f_plus = loss_value_fn(net)
        arr[idx] = orig - h
        f_minus = loss_value_fn(net)
        arr[idx] = orig
        grads.append((f_plus - f_minus) / (2.0 * h))
    return np.array(grads)


def sample_coords(net, rng, n):
    """Random parameter coordinates spread over all layers."""
    coords = []
    for _ in range(n):
        layer = int(rng.integers(0, len(net.weights)))
        if rng.random() < 0.8:
            w = net.weights[layer]
            coords.append(("w", layer,
                           (int(rng.integers(0, w.shape[0])), int(rng.integers(0, w.shape[1])))))
        else:
            b = net.biases[layer]
            coords.append(("b", layer, (int(rng.integers(0, b.shape[0])),)))
    return coords
