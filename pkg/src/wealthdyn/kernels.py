"""Hot loops: forward-Euler propagation and pairwise kinetic exchange.

Each kernel exists twice: a numba-compiled scalar loop and a numpy
reference. The two agree to floating-point rounding on identical inputs;
the public modules call the ``*_kernel`` aliases, which follow the backend
chosen in :mod:`wealthdyn._accel`.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


def euler_trajectory_numpy(f0, b, gamma, max_supply, delta_t, steps, neg_tol):
    """Propagate ``f0`` for ``steps - 1`` Euler steps.

    Returns ``(trajectory, failed_at)``. ``failed_at`` is -1 on success,
    otherwise the index of the first state with a component below
    ``-neg_tol``; rows from that index on are left as zeros.
    """
    n = f0.shape[0]
    traj = np.zeros((steps, n))
    traj[0] = f0
    f = f0.copy()
    inv_m = 1.0 / max_supply
    for k in range(1, steps):
        rate = f * (b @ f) * inv_m + gamma @ f
        f = f + delta_t * rate
        if np.any(f < -neg_tol):
            return traj, k
        traj[k] = f
    return traj, -1


@njit(cache=True, nogil=True)
def euler_trajectory_numba(f0, b, gamma, max_supply, delta_t, steps, neg_tol):
    n = f0.shape[0]
    traj = np.zeros((steps, n))
    f = f0.copy()
    for i in range(n):
        traj[0, i] = f[i]
    rate = np.empty(n)
    inv_m = 1.0 / max_supply
    for k in range(1, steps):
        for i in range(n):
            bf = 0.0
            gf = 0.0
            for j in range(n):
                bf += b[i, j] * f[j]
                gf += gamma[i, j] * f[j]
            rate[i] = f[i] * bf * inv_m + gf
        bad = False
        for i in range(n):
            f[i] = f[i] + delta_t * rate[i]
            if f[i] < -neg_tol:
                bad = True
        if bad:
            return traj, k
        for i in range(n):
            traj[k, i] = f[i]
    return traj, -1


def kinetic_exchanges_numpy(wealth, first, second, eps, unsaved):
    """Apply a sequence of pairwise exchanges in place.

    ``unsaved[a]`` is ``1 - lambda_a``; the no-saving and global-saving
    rules are the special cases of all-ones and a constant vector.
    """
    w = wealth.tolist()
    keep = unsaved.tolist()
    for a, b, e in zip(first.tolist(), second.tolist(), eps.tolist()):
        delta = (1.0 - e) * keep[b] * w[b] - e * keep[a] * w[a]
        w[a] += delta
        w[b] -= delta
    wealth[:] = w
    return wealth


@njit(cache=True, nogil=True)
def kinetic_exchanges_numba(wealth, first, second, eps, unsaved):
    for k in range(first.shape[0]):
        a = first[k]
        b = second[k]
        e = eps[k]
        delta = (1.0 - e) * unsaved[b] * wealth[b] - e * unsaved[a] * wealth[a]
        wealth[a] += delta
        wealth[b] -= delta
    return wealth


if USE_NUMBA:
    euler_trajectory_kernel = euler_trajectory_numba
    kinetic_exchanges_kernel = kinetic_exchanges_numba
else:
    euler_trajectory_kernel = euler_trajectory_numpy
    kinetic_exchanges_kernel = kinetic_exchanges_numpy
