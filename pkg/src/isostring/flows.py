"""Isospectral vector fields, Hamiltonians and spectral invariants of discrete strings."""

from __future__ import annotations

import numpy as np

from .greens import BareGreen, build_kernels, rational_b0_operator
from .string_model import (
    CH_PEAKON,
    DiscreteString,
    FlowSpec,
    PeakonString,
    ValidationError,
)

__all__ = [
    "vector_field",
    "matrix_vector_field",
    "hamiltonian",
    "invariants",
]


def _averaged_dg(s: DiscreteString) -> np.ndarray:
    """``D[j, i] = <d/dx G0(x, x_i)>`` at ``x = x_j``."""
    green = BareGreen(s.bc)
    x = s.positions
    return green.dx_avg(x[:, None], x[None, :])


def _string_field(s: DiscreteString, k: int, eps: float):
    ks = build_kernels(s)
    G = ks.G
    D = _averaged_dg(s)
    B = rational_b0_operator(s, k, eps)
    sign = (-1.0) ** k
    # b0(x_j) = sign * g_j^T B g_j with g_j = G[:, j]
    b0 = sign * np.einsum("ij,ik,kj->j", G, B, G)
    # <b0'>(x_j): derivative lands on either end of the chain
    left = np.einsum("ji,ik,kj->j", D, B, G)
    right = np.einsum("ij,ik,jk->j", G, B, D)
    db0 = sign * (left + right)
    return -b0, s.masses * db0


def vector_field(s, spec: FlowSpec):
    """Velocities ``(xdot, mdot)`` of the flow ``spec`` at configuration ``s``.

    For the truncated flow (``spec.epsilon == 0``) on a string this is
    ``xdot_j = (-1)^(k+1) G_k(x_j, x_j)`` and
    ``mdot_j = (-1)^k m_j <G_k,x(x, x)>(x_j)``, the averaged derivative
    being expanded by the product rule over the two end factors of the
    chain.  For ``epsilon > 0`` the rational ``b_0`` replaces
    ``(-1)^k G_k``: ``xdot_j = -b_0(x_j)``, ``mdot_j = m_j <b_0'>(x_j)``.
    Peakon configurations are dispatched to :mod:`isostring.peakons`.
    """
    if spec.kernel_kind == CH_PEAKON or isinstance(s, PeakonString):
        if not isinstance(s, PeakonString) or spec.kernel_kind != CH_PEAKON:
            raise ValidationError(["kernel/spec mismatch between string type and flow kernel"])
        from .peakons import peakon_field

        return peakon_field(s, spec.k)
    return _string_field(s, spec.k, spec.epsilon)


def matrix_vector_field(s: DiscreteString, k: int):
    """Truncated field in product form: ``(K (MK)^k)_jj`` and ``(M J (MK)^k)_jj``."""
    ks = build_kernels(s)
    MK = ks.M @ ks.K
    P = np.linalg.matrix_power(MK, k)
    xdot = np.diag(ks.K @ P).copy()
    mdot = np.diag(ks.M @ ks.J @ P).copy()
    return xdot, mdot


def hamiltonian(s, k: int) -> float:
    """``H^(k) = (-1)^(k+1)/(k+1) * sum_i m_i G_k(x_i, x_i) = tr((M K)^(k+1)) / (k+1)``.

    Works for strings and peakon configurations (the latter with the
    real-line kernel).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(s, PeakonString):
        from .peakons import peakon_kernels

        ks = peakon_kernels(s)
    else:
        ks = build_kernels(s)
    MK = ks.M @ ks.K
    return float(np.trace(np.linalg.matrix_power(MK, k + 1))) / (k + 1)


def invariants(s: DiscreteString, jmax: int) -> list[float]:
    """Chain invariants ``[I_0, I_1, ..., I_jmax]``.

    ``I_0 = sum_i m_i G0(x_i, x_i)`` and, for ``j >= 1``, ``I_j`` sums over
    increasing index chains ``a_1 < ... < a_j`` the product
    ``m_{a_j} (x_{a_j} - x_{a_{j-1}}) ... m_{a_1} G0(x_{a_1}, x_{a_j})``.
    A chain of length one has no gaps, so ``I_1 = I_0``.
    """
    if jmax < 0:
        raise ValueError("jmax must be >= 0")
    x, m = s.positions, s.masses
    G = -build_kernels(s).K
    I0 = float(np.sum(m * np.diag(G)))
    out = [I0]
    if jmax >= 1:
        out.append(I0)
    # U[a, b] = x_b - x_a for a < b
    U = np.triu(x[None, :] - x[:, None], k=1)
    end = np.outer(m, m) * G
    W = U
    for _ in range(2, jmax + 1):
        out.append(float(np.sum(np.triu(end, k=1) * W)))
        W = W @ np.diag(m) @ U
    return out
