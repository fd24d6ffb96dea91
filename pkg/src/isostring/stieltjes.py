"""Inverse problem: moments, Hankel determinants and string reconstruction.

With ``j' = n - j`` the string with ``H = 0`` is recovered from the
spectral measure by

    m_j        = (D1[j'])^2 / (D0[j'] D0[j' + 1])        1 <= j <= n
    l_j        = (D0[j'])^2 / (D1[j'] D1[j' - 1])        1 <= j <= n - 1
    l_0 + 1/h  = (D0[n])^2  / (D1[n] D1[n - 1])
    l_n        = 1 + 1/h - c_{-1}

where ``Dl[k]`` is the ``k x k`` Hankel minor with entries ``c_{i+j+l-2}``
of the moments ``c_j = sum_i mu_i z_i^j``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .spectral import SpectralData
from .string_model import BoundaryConditions, DiscreteString

__all__ = [
    "HankelTable",
    "InversionError",
    "UnsupportedBoundaryError",
    "InversionWarning",
    "moments",
    "hankel",
    "hankel_from_measure",
    "invert",
    "continued_fraction",
    "evaluate_continued_fraction",
]


class InversionError(ValueError):
    """Reconstruction produced a nonpositive mass or gap."""

    def __init__(self, message: str, minors: dict):
        super().__init__(message)
        self.minors = minors


class UnsupportedBoundaryError(ValueError):
    pass


class InversionWarning(UserWarning):
    pass


@dataclass
class HankelTable:
    """Moments and minors; ``logs[(k, l)] = (sign, log|Delta_k^l|)`` avoids overflow."""

    moments: dict
    minors: dict = field(default_factory=dict)
    logs: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.minors[key]

    def _set(self, key, sign: float, logabs: float):
        self.logs[key] = (sign, logabs)
        with np.errstate(over="ignore"):
            self.minors[key] = float(sign * np.exp(logabs)) if sign else 0.0


def moments(sd: SpectralData, jmin: int = -1, jmax: int = 0) -> dict:
    """``{j: c_j}`` with ``c_j = sum_i mu_i z_i^j`` for ``jmin <= j <= jmax``."""
    return {j: float(np.sum(sd.mu * sd.z**j)) for j in range(jmin, jmax + 1)}


def _minor_scale(c: dict) -> float:
    pos = [j for j in c if j >= 0]
    lo, hi = min(pos), max(pos)
    if hi == lo or c[lo] <= 0 or c[hi] <= 0:
        return 1.0
    return (c[hi] / c[lo]) ** (1.0 / (hi - lo))


def hankel(needed: Iterable[tuple], c: dict) -> HankelTable:
    """Hankel minors ``Delta_k^l`` for each requested ``(k, l)``.

    Determinants come from pivoted LU on a rescaled matrix: the moments
    are replaced by ``c_j / s^j`` with ``s`` the geometric growth rate of
    the sequence, and the factor ``s^(k (l + k - 1))`` is restored on
    the log scale.
    """
    s = _minor_scale(c)
    table = HankelTable(dict(c))
    for k, l in needed:
        if k == 0:
            table._set((k, l), 1.0, 0.0)
            continue
        idx = [i + j + l for i in range(k) for j in range(k)]
        missing = sorted({j for j in idx if j not in c})
        if missing:
            raise ValueError(f"insufficient moments for Delta_{k}^{l}: need c_{missing}")
        mat = np.array([c[j] / s**j for j in idx]).reshape(k, k)
        sign, logdet = np.linalg.slogdet(mat)
        table._set((k, l), float(sign), logdet + k * (l + k - 1) * math.log(s))
    return table


def hankel_from_measure(needed: Iterable[tuple], sd: SpectralData) -> HankelTable:
    """Hankel minors of an ``n``-atom measure via Cauchy-Binet.

    ``Delta_k^l = sum_{|S| = k} prod_{i in S} mu_i z_i^l prod_{i < j in S} (z_i - z_j)^2``;
    every term is positive, so no cancellation occurs.
    """
    z, mu = sd.z, sd.mu
    logz, logmu = np.log(z), np.log(mu)
    table = HankelTable({})
    for k, l in needed:
        if k == 0:
            table._set((k, l), 1.0, 0.0)
            continue
        logs = []
        for S in itertools.combinations(range(len(z)), k):
            S = list(S)
            term = float(np.sum(logmu[S] + l * logz[S]))
            for a, b in itertools.combinations(z[S], 2):
                term += 2.0 * math.log(abs(a - b))
            logs.append(term)
        top = max(logs)
        table._set((k, l), 1.0, top + math.log(sum(math.exp(v - top) for v in logs)))
    return table


def _needed(n: int):
    return [(k, 0) for k in range(n + 1)] + [(k, 1) for k in range(n + 1)]


def _stieltjes_coefficients(sd: SpectralData, method: str):
    """``[a_1, ..., a_2n]`` of ``int dmu/(z + zeta) = 1/(a_1 z + 1/(a_2 + ...))``."""
    n = sd.n
    if method == "lu":
        table = hankel(_needed(n), moments(sd, -1, 2 * n - 1))
    elif method == "cauchy_binet":
        table = hankel_from_measure(_needed(n), sd)
    else:
        raise ValueError(f"unknown method {method!r}")
    def ratio(num, d1, d2):
        (sn, ln), (s1, l1), (s2, l2) = table.logs[num], table.logs[d1], table.logs[d2]
        if s1 * s2 == 0:
            return math.nan
        return s1 * s2 * math.exp(2 * ln - l1 - l2) if sn else 0.0

    a = []
    for j in range(n):
        a.append(ratio((j, 1), (j, 0), (j + 1, 0)))
        a.append(ratio((j + 1, 0), (j + 1, 1), (j, 1)))
    return a, table


def continued_fraction(sd: SpectralData, method: str = "cauchy_binet") -> list[float]:
    """Coefficients ``[gamma, a_1, a_2, ..., a_2n]`` of

    ``gamma + 1/(a_1 z + 1/(a_2 + 1/(a_3 z + ...)))``.

    For a string with ``H = 0`` this is ``[l_n, m_n, l_{n-1}, ..., m_1, l_0 + 1/h]``.
    """
    a, _ = _stieltjes_coefficients(sd, method)
    return [sd.gamma] + a


def evaluate_continued_fraction(coeffs: list[float], z):
    """Evaluate ``[gamma, a_1, ..., a_2n]`` from the bottom up."""
    z = np.asarray(z, dtype=float)
    gamma, a = coeffs[0], coeffs[1:]
    tail = np.zeros_like(z)
    for i in range(len(a) - 1, -1, -1):
        term = a[i] * z if i % 2 == 0 else a[i]
        tail = 1.0 / (term + tail) if i < len(a) - 1 else 1.0 / term
    return gamma + tail


def invert(
    sd: SpectralData,
    bc: BoundaryConditions,
    method: str = "cauchy_binet",
    length_tol: float = 1e-8,
) -> DiscreteString:
    """Reconstruct the string with boundary data ``bc`` from ``sd``.

    Only ``H = 0`` with finite or infinite ``h`` is supported; for
    ``h = inf`` the ``1/h`` terms vanish.  ``sd.gamma`` is ignored: the last
    gap is re-derived from ``-W(0) = 1 + 1/h``.

    Raises
    ------
    UnsupportedBoundaryError
        For ``H != 0``.
    InversionError
        When a reconstructed mass or gap is not positive; carries the minors.
    """
    if bc.H != 0:
        raise UnsupportedBoundaryError(
            f"inversion implemented for H=0 only (finite h or h=inf); got H={bc.H}"
        )
    if bc.violations():
        raise UnsupportedBoundaryError("; ".join(bc.violations()))
    n = sd.n
    if np.any(sd.z <= 0) or np.any(sd.mu <= 0) or len(np.unique(sd.z)) != n:
        raise InversionError("spectral data must have distinct positive z and positive mu", {})
    a, table = _stieltjes_coefficients(sd, method)
    inv_h = 0.0 if bc.h_inf else 1.0 / bc.h
    # a_{2i-1} = m_{n-i+1}, a_{2i} = l_{n-i}
    masses = np.array([a[2 * (n - j)] for j in range(1, n + 1)])
    gaps = np.empty(n + 1)
    for j in range(1, n):
        gaps[j] = a[2 * (n - j) - 1]
    gaps[0] = a[2 * n - 1] - inv_h
    c_m1 = float(np.sum(sd.mu / sd.z))
    gaps[n] = 1.0 + inv_h - c_m1
    by_length = 1.0 - float(np.sum(gaps[:n]))
    if abs(by_length - gaps[n]) > length_tol:
        warnings.warn(
            f"last gap mismatch: -W(0) route {gaps[n]:.12g} vs length route {by_length:.12g}",
            InversionWarning,
            stacklevel=2,
        )
    if not (np.all(masses > 0) and np.all(gaps > 0)):
        raise InversionError(
            f"nonpositive reconstruction: masses={masses.tolist()}, gaps={gaps.tolist()}",
            dict(table.minors),
        )
    return DiscreteString(np.cumsum(gaps[:n]), masses, bc)
