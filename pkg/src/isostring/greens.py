"""Green's function of ``D_x^2`` with Robin ends and its iterates on a discrete string.

The bare kernel factors as ``G0(x, y) = -c(min(x, y)) * chat(max(x, y)) / w``
with linear ``c`` (left boundary condition) and ``chat`` (right boundary
condition).  Everything else in this module is built from ``G0`` restricted
to the mass points plus the vectors ``g(x) = (G0(x, x_1), ..., G0(x, x_n))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .string_model import BoundaryConditions, DiscreteString

__all__ = [
    "BareGreen",
    "KernelSet",
    "g0",
    "build_kernels",
    "iterated_diag",
    "iterated_kernel_matrix",
    "epsilon_resolvent",
    "resolvent_derivative_diag",
    "rational_b_fields",
    "rational_b0_operator",
    "neumann_partial_sum",
]


@dataclass(frozen=True)
class BareGreen:
    """Closed-form bare Green's function for boundary coefficients ``(h, H)``."""

    bc: BoundaryConditions

    @property
    def w(self) -> float:
        h, H = self.bc.h, self.bc.H
        if self.bc.h_inf and self.bc.H_inf:
            return 1.0
        if self.bc.h_inf:
            return 1.0 + H
        if self.bc.H_inf:
            return 1.0 + h
        return h + H + h * H

    def c(self, x):
        if self.bc.h_inf:
            return np.asarray(x, dtype=float)
        return self.bc.h * np.asarray(x, dtype=float) + 1.0

    def chat(self, x):
        if self.bc.H_inf:
            return 1.0 - np.asarray(x, dtype=float)
        return 1.0 + self.bc.H * (1.0 - np.asarray(x, dtype=float))

    @property
    def dc(self) -> float:
        return 1.0 if self.bc.h_inf else float(self.bc.h)

    @property
    def dchat(self) -> float:
        return -1.0 if self.bc.H_inf else -float(self.bc.H)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return -self.c(np.minimum(x, y)) * self.chat(np.maximum(x, y)) / self.w

    def dx_left(self, x, y):
        """Left derivative of ``G0(., y)`` at ``x``."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.where(x <= y, -self.dc * self.chat(y), -self.c(y) * self.dchat) / self.w

    def dx_right(self, x, y):
        """Right derivative of ``G0(., y)`` at ``x``."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.where(x < y, -self.dc * self.chat(y), -self.c(y) * self.dchat) / self.w

    def dx_avg(self, x, y):
        """Arithmetic mean of the one-sided derivatives of ``G0(., y)`` at ``x``."""
        return 0.5 * (self.dx_left(x, y) + self.dx_right(x, y))


def _check_domain(*arrays):
    for a in arrays:
        a = np.asarray(a)
        if np.any(a < 0) or np.any(a > 1) or np.any(np.isnan(a)):
            raise ValueError("Green's function arguments must lie in [0, 1]")


def g0(bc: BoundaryConditions, x, y):
    """Bare Green's function ``G0(x, y)``; vectorized over ``x`` and ``y``."""
    if bc.violations():
        raise ValueError("; ".join(bc.violations()))
    _check_domain(x, y)
    out = BareGreen(bc)(x, y)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class KernelSet:
    """Kernel matrices at the mass points.

    Attributes
    ----------
    K : ndarray
        ``K[i, j] = -G0(x_i, x_j)``, symmetric and entrywise positive.
    M : ndarray
        ``diag(m)``.
    J : ndarray
        ``J[i, j] = 2 <d/dx G0(x, x_j)>`` at ``x = x_i`` (one-sided average).
    """

    K: np.ndarray
    M: np.ndarray
    J: np.ndarray

    @property
    def G(self) -> np.ndarray:
        return -self.K


def build_kernels(s: DiscreteString) -> KernelSet:
    green = BareGreen(s.bc)
    x = s.positions
    K = -green(x[:, None], x[None, :])
    J = 2.0 * green.dx_avg(x[:, None], x[None, :])
    return KernelSet(K=K, M=np.diag(s.masses), J=J)


def _gvec(s: DiscreteString, x) -> np.ndarray:
    """Matrix with rows ``g(x_a) = (G0(x_a, x_1), ..., G0(x_a, x_n))``."""
    green = BareGreen(s.bc)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return green(x[:, None], s.positions[None, :])


def iterated_kernel_matrix(s: DiscreteString, k: int) -> np.ndarray:
    """``G_k`` restricted to the mass points, ``G (M G)^k`` with ``G = -K``."""
    ks = build_kernels(s)
    G, MG = ks.G, ks.M @ ks.G
    out = G
    for _ in range(k):
        out = out @ MG
    return out


def iterated_diag(s: DiscreteString, k: int, x):
    """Diagonal of the ``k``-th iterated kernel, ``G_k(x, x)``.

    Evaluated as ``g(x)^T M (G M)^(k-1) g(x)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_domain(x)
    scalar = np.ndim(x) == 0
    gx = _gvec(s, x)
    ks = build_kernels(s)
    B = ks.M.copy()
    GM = ks.G @ ks.M
    for _ in range(k - 1):
        B = B @ GM
    out = np.einsum("ai,ij,aj->a", gx, B, gx)
    return float(out[0]) if scalar else out


def epsilon_resolvent(s: DiscreteString, eps: float) -> np.ndarray:
    """Green's function of ``D_x^2 - eps * rho`` at the mass points.

    Exact summation of the Neumann series ``sum_j eps^j G_j``:
    ``G_eps = -(I + eps K M)^{-1} K``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    ks = build_kernels(s)
    A = np.eye(s.n) + eps * ks.K @ ks.M
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError(f"I + eps*K*M is singular (condition estimate {cond:.3e})")
    return -np.linalg.solve(A, ks.K)


def _resolvent_parts(s: DiscreteString, eps: float):
    ks = build_kernels(s)
    A = ks.G @ ks.M
    R = np.linalg.solve(np.eye(s.n) - eps * A, np.eye(s.n))
    return ks, A, R


def resolvent_derivative_diag(s: DiscreteString, eps: float, r: int) -> Callable:
    """Return ``x -> G_eps^{(r)}(x, x) / r!`` (``r``-th ``eps`` derivative).

    Uses ``d^r/d eps^r [eps (I - eps A)^{-1}] = r! A^{r-1} (I - eps A)^{-(r+1)}``
    with ``A = G M``; no numerical differentiation.
    """
    ks, A, R = _resolvent_parts(s, eps)
    green = BareGreen(s.bc)
    if r == 0:
        B = eps * ks.M @ R
    else:
        B = ks.M @ np.linalg.matrix_power(A, r - 1) @ np.linalg.matrix_power(R, r + 1)

    def evaluate(x):
        scalar = np.ndim(x) == 0
        gx = _gvec(s, x)
        out = np.einsum("ai,ij,aj->a", gx, B, gx)
        if r == 0:
            xs = np.atleast_1d(np.asarray(x, float))
            out = out + green(xs, xs)
        return float(out[0]) if scalar else out

    return evaluate


def rational_b0_operator(s: DiscreteString, k: int, eps: float) -> np.ndarray:
    """Symmetric ``B`` with ``b_0(x) = (-1)^k g(x)^T B g(x)``.

    ``B = M (G M)^(k-1) (I - eps G M)^(-k)``.  This is the exact Taylor
    remainder of ``eps -> G_eps(x, x)`` divided by ``eps^k``, so the
    cancellation in the defining difference quotient never happens.
    At ``eps = 0`` it reduces to the truncated field ``(-1)^k G_k(x, x)``.
    """
    ks = build_kernels(s)
    A = ks.G @ ks.M
    B = ks.M @ np.linalg.matrix_power(A, k - 1)
    if eps > 0:
        R = np.linalg.solve(np.eye(s.n) - eps * A, np.eye(s.n))
        B = B @ np.linalg.matrix_power(R, k)
    return 0.5 * (B + B.T)


def rational_b_fields(s: DiscreteString, k: int, eps: float) -> list[Callable]:
    """Evaluators ``[b_0, b_{-1}, ..., b_{-k}]`` of the rational flow of order ``k``.

    ``b_{-j}(x) = (-1)^(k-j) G_eps^{(k-j)}(x, x) / (k-j)!`` and
    ``b_0(x) = [G0(x, x) - sum_{j<k} G_eps^{(j)}(x, x) (-eps)^j / j!] / eps^k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    B = rational_b0_operator(s, k, eps)
    sign = (-1.0) ** k

    def b0(x):
        scalar = np.ndim(x) == 0
        gx = _gvec(s, x)
        out = sign * np.einsum("ai,ij,aj->a", gx, B, gx)
        return float(out[0]) if scalar else out

    fields = [b0]
    for j in range(1, k + 1):
        deriv = resolvent_derivative_diag(s, eps, k - j)
        fields.append(_scaled(deriv, (-1.0) ** (k - j)))
    return fields


def _scaled(f: Callable, factor: float) -> Callable:
    def g(x):
        return factor * f(x)

    return g


def neumann_partial_sum(s: DiscreteString, eps: float, order: int) -> np.ndarray:
    """``sum_{j=0}^{order} eps^j G_j`` at the mass points."""
    ks = build_kernels(s)
    term = ks.G
    total = term.copy()
    for _ in range(order):
        term = eps * term @ ks.M @ ks.G
        total = total + term
    return total
