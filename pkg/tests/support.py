"""Shared test helpers: random strings and brute-force oracles."""

import itertools
import math

import numpy as np
from scipy.linalg import solve_banded

from isostring import BoundaryConditions, DiscreteString, g0, spectrum

INF = math.inf


def random_string(rng, n, h, H, lo=0.05, hi=0.7, min_gap=0.02, mass_scale=0.4):
    """Light random string; positions in (lo, hi) at least ``min_gap`` apart."""
    while True:
        x = np.sort(rng.uniform(lo, hi, n))
        if n == 1 or np.min(np.diff(x)) >= min_gap:
            break
    m = rng.uniform(0.5, 1.5, n) * mass_scale / n
    return DiscreteString(x, m, BoundaryConditions(h, H))


def survives(s, k, t_end=1.0):
    """For ``H = 0`` the last gap at time t is ``1 + 1/h - sum mu e^(t/z^k) / z``.

    It decreases in t, so the string stays inside the interval on
    ``[0, t_end]`` iff it is positive at ``t_end``.  Other boundary
    conditions are accepted unchecked.
    """
    if s.bc.H != 0:
        return True
    sd = spectrum(s)
    inv_h = 0.0 if s.bc.h_inf else 1.0 / s.bc.h
    return 1.0 + inv_h - np.sum(sd.mu * np.exp(t_end / sd.z**k) / sd.z) > 0.05


def random_surviving_string(rng, n, h, H, ks=(1, 2, 3), t_end=1.0, max_tries=2000, **kw):
    """Draw strings until one survives every flow in ``ks``; masses shrink after each 50 misses."""
    scale = kw.pop("mass_scale", 0.4)
    for attempt in range(max_tries):
        s = random_string(rng, n, h, H, mass_scale=scale, **kw)
        if all(survives(s, k, t_end) for k in ks):
            return s
        if attempt % 50 == 49:
            scale *= 0.7
    raise RuntimeError(f"no surviving string for n={n}, h={h}, H={H} after {max_tries} draws")


def tuple_sum_diag(s, k, x):
    """``G_k(x, x)`` by explicit summation over index tuples ``(i_1, ..., i_k)``."""
    xs, ms, bc = s.positions, s.masses, s.bc
    total = 0.0
    for idx in itertools.product(range(s.n), repeat=k):
        term = g0(bc, x, xs[idx[-1]])
        for a, b in zip(idx[::-1][:-1], idx[::-1][1:]):
            term *= ms[a] * g0(bc, xs[a], xs[b])
        term *= ms[idx[0]] * g0(bc, xs[idx[0]], x)
        total += term
    return total


def tuple_sum_field(s, k, step=1e-6):
    """String field from tuple sums: ``xdot = (-1)^(k+1) G_k(x_j, x_j)`` and
    ``mdot = (-1)^k m_j <d/dx G_k(x, x)>`` with one-sided three-point slopes."""
    sign = (-1.0) ** k
    xdot = np.array([-sign * tuple_sum_diag(s, k, xj) for xj in s.positions])
    mdot = np.empty(s.n)
    for j, xj in enumerate(s.positions):
        f = [tuple_sum_diag(s, k, xj + d * step) for d in (-2, -1, 0, 1, 2)]
        left = (3 * f[2] - 4 * f[1] + f[0]) / (2 * step)
        right = (-3 * f[2] + 4 * f[3] - f[4]) / (2 * step)
        mdot[j] = sign * s.masses[j] * 0.5 * (left + right)
    return xdot, mdot


def bvp_green(bc, y, npts=10_000):
    """Solve ``G'' = delta(x - y)`` with the Robin conditions by central differences.

    Returns the grid and the discrete solution; ``y`` is snapped to the
    nearest grid node.
    """
    x = np.linspace(0.0, 1.0, npts)
    d = x[1] - x[0]
    iy = int(round(y / d))
    ab = np.zeros((3, npts))
    ab[0, 1:] = 1.0
    ab[1, :] = -2.0
    ab[2, :-1] = 1.0
    rhs = np.zeros(npts)
    rhs[iy] = d  # (delta / d) * d^2
    # left: ghost node G_{-1} = G_1 - 2 d h G_0
    if bc.h_inf:
        ab[1, 0], ab[0, 1] = 1.0, 0.0
        rhs[0] = 0.0
    else:
        ab[0, 1] = 2.0
        ab[1, 0] = -2.0 - 2.0 * d * bc.h
    if bc.H_inf:
        ab[1, -1], ab[2, -2] = 1.0, 0.0
        rhs[-1] = 0.0
    else:
        ab[2, -2] = 2.0
        ab[1, -1] = -2.0 - 2.0 * d * bc.H
    return x, solve_banded((1, 1), ab, rhs), x[iy]


def shoot(s, z):
    """``phi(1; z)`` and ``phi_x(1; z)`` by numerically integrating ``v'' = 0``
    between the atoms and applying the jump ``[v'] = -z m v`` at each atom."""
    from scipy.integrate import solve_ivp

    bc = s.bc
    v, dv = (0.0, 1.0) if bc.h_inf else (1.0, bc.h)
    nodes = [0.0, *s.positions, 1.0]
    for j in range(len(nodes) - 1):
        sol = solve_ivp(lambda t, y: [y[1], 0.0], (nodes[j], nodes[j + 1]), [v, dv],
                        rtol=1e-12, atol=1e-14)
        v, dv = sol.y[0, -1], sol.y[1, -1]
        if j < s.n:
            dv -= z * s.masses[j] * v
    return v, dv
