"""Forward spectral problem of the discrete string.

The solution of ``v_xx = -z rho v`` with the left boundary condition is
piecewise linear, ``phi = p_j (x - x_j) + q_j`` on ``(x_j, x_{j+1})``, and
is propagated across the masses by

    q_{j+1} = q_j + p_j l_j,        p_{j+1} = p_j - z m_{j+1} q_{j+1}.

Eigenvalues are the zeros of ``D(z)`` built from ``phi(1)``, ``phi_x(1)``;
the residues of the Weyl function ``W = N / D`` give the spectral measure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .string_model import DiscreteString

__all__ = [
    "TransferPolynomials",
    "SpectralData",
    "SpectrumError",
    "transfer",
    "boundary_values",
    "nd_functions",
    "weyl",
    "spectrum",
    "evolve_spectral",
]


class SpectrumError(RuntimeError):
    """Root finding did not locate exactly ``n`` eigenvalues."""


@dataclass(frozen=True)
class TransferPolynomials:
    """``p_j``, ``q_j`` (j = 0..n) as polynomials in ``z``."""

    p: tuple
    q: tuple
    last_gap: float

    @property
    def phi_end(self) -> Polynomial:
        return self.p[-1] * self.last_gap + self.q[-1]

    @property
    def dphi_end(self) -> Polynomial:
        return self.p[-1]


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues ``z``, Weyl residues ``mu`` and the constant ``gamma``.

    ``-W(-z) = gamma + sum_j mu_j / (z + z_j)``.
    """

    z: np.ndarray
    mu: np.ndarray
    gamma: float

    def __post_init__(self):
        for name in ("z", "mu"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n(self) -> int:
        return len(self.z)

    def stieltjes(self, z):
        """Evaluate ``gamma + sum_j mu_j / (z + z_j)``."""
        z = np.asarray(z, dtype=complex if np.iscomplexobj(z) else float)
        return self.gamma + np.sum(self.mu / (z[..., None] + self.z), axis=-1)

    def to_json(self) -> str:
        return json.dumps({"z": self.z.tolist(), "mu": self.mu.tolist(), "gamma": self.gamma})

    @classmethod
    def from_json(cls, text: str) -> "SpectralData":
        doc = json.loads(text)
        return cls(doc["z"], doc["mu"], doc["gamma"])


def _initial(s: DiscreteString):
    # h = inf: (h, 1)/h -> (1, 0)
    return (1.0, 0.0) if s.bc.h_inf else (float(s.bc.h), 1.0)


def transfer(s: DiscreteString) -> TransferPolynomials:
    p0, q0 = _initial(s)
    p, q = [Polynomial([p0])], [Polynomial([q0])]
    zpoly = Polynomial([0.0, 1.0])
    gaps = s.gaps
    for j in range(s.n):
        qn = q[-1] + p[-1] * gaps[j]
        pn = p[-1] - zpoly * s.masses[j] * qn
        q.append(qn)
        p.append(pn)
    return TransferPolynomials(tuple(p), tuple(q), float(gaps[-1]))


def boundary_values(s: DiscreteString, z):
    """``phi(1; z)``, ``phi_x(1; z)`` and their ``z``-derivatives at numeric ``z``."""
    z = np.asarray(z, dtype=complex if np.iscomplexobj(z) else float)
    p0, q0 = _initial(s)
    p = np.full_like(z, p0)
    q = np.full_like(z, q0)
    dp = np.zeros_like(z)
    dq = np.zeros_like(z)
    gaps = s.gaps
    for j in range(s.n):
        q = q + p * gaps[j]
        dq = dq + dp * gaps[j]
        m = s.masses[j]
        dp = dp - m * q - z * m * dq
        p = p - z * m * q
    ln = gaps[-1]
    return p * ln + q, p, dp * ln + dq, dp


def _nd(s: DiscreteString, z):
    phi, dphi, phi_z, dphi_z = boundary_values(s, z)
    H = s.bc.H
    if s.bc.H_inf:
        return dphi, phi, phi_z
    if H == 0:
        return -phi, dphi, dphi_z
    return dphi - H * phi, dphi + H * phi, dphi_z + H * phi_z


def nd_functions(s: DiscreteString):
    """Return callables ``(N, D)`` of ``z``.

    ``D = phi_x(1) + H phi(1)`` and ``N = phi_x(1) - H phi(1)`` for
    ``0 < H < inf``; ``D = phi_x(1)``, ``N = -phi(1)`` for ``H = 0``;
    ``D = phi(1)``, ``N = phi_x(1)`` for ``H = inf``.
    """

    def N(z):
        return _nd(s, z)[0]

    def D(z):
        return _nd(s, z)[1]

    return N, D


def weyl(s: DiscreteString, z):
    """Weyl function ``W(z) = N(z) / D(z)``."""
    n, d, _ = _nd(s, z)
    return n / d


def _residues(s: DiscreteString, z: np.ndarray) -> np.ndarray:
    # mu_j = c * phi(x_n)^2 / sum_i m_i phi(x_i)^2 by the Lagrange identity at a
    # root of D.  phi(x_i) is read off the eigenvectors of M^1/2 K M^1/2 rather
    # than the transfer recursion, which loses tiny residues to cancellation.
    from .greens import build_kernels

    r = np.sqrt(s.masses)
    w, V = np.linalg.eigh(r[:, None] * build_kernels(s).K * r[None, :])
    order = np.argsort(1.0 / w)
    if not np.allclose(np.sort(1.0 / w), z, rtol=1e-6):
        raise SpectrumError("eigenvector and root-finder spectra disagree")
    lead = V[-1, order] ** 2 / s.masses[-1]
    ln = float(s.gaps[-1])
    if s.bc.H_inf:
        return lead / ln**2
    H = s.bc.H
    return lead * (2.0 * H / (1.0 + H * ln) ** 2 if H else 1.0)


def _gamma(s: DiscreteString) -> float:
    ln = float(s.gaps[-1])
    if s.bc.H_inf:
        return -1.0 / ln
    H = s.bc.H
    if H == 0:
        return ln
    return (H * ln - 1.0) / (H * ln + 1.0)


def _root_bounds(s: DiscreteString):
    from .greens import build_kernels

    ks = build_kernels(s)
    trace = float(np.sum(s.masses * np.diag(ks.K)))
    lo = 0.5 / trace
    tp = transfer(s)
    H = s.bc.H
    if s.bc.H_inf:
        D = tp.phi_end
    elif H == 0:
        D = tp.dphi_end
    else:
        D = tp.dphi_end + H * tp.phi_end
    c = D.coef
    root_sum = abs(c[-2] / c[-1]) if len(c) >= 2 and c[-1] != 0 else 1.0 / lo
    hi = 2.0 * max(root_sum, 1.0 / trace)
    return lo, hi


def _refine(f, a: float, b: float, fa: float) -> float:
    # bisection to a narrow bracket, then safeguarded Newton
    for _ in range(200):
        if b - a <= 1e-7 * b:
            break
        c = 0.5 * (a + b)
        fc = f(c)[1]
        if fc == 0:
            return c
        if np.sign(fc) == np.sign(fa):
            a, fa = c, fc
        else:
            b = c
    z = 0.5 * (a + b)
    for _ in range(50):
        _, d, dd = f(z)
        if dd == 0:
            break
        step = d / dd
        znew = z - step
        if not a <= znew <= b:
            break
        z = znew
        if abs(step) <= 1e-15 * abs(z):
            break
    return float(z)


def spectrum(s: DiscreteString) -> SpectralData:
    """Eigenvalues, Weyl residues and Stieltjes constant of ``s``.

    Roots of ``D`` are bracketed by sign changes on a geometric grid and
    refined by bisection followed by Newton's method.  The residues
    ``mu_j = N(z_j) / D'(z_j)`` are evaluated through the equivalent
    positive form ``c phi(x_n)^2 / sum_i m_i phi(x_i)^2`` with the
    eigenfunction values taken from a symmetric eigensolver, which keeps
    tiny residues accurate.
    """
    n = s.n

    def f(z):
        return _nd(s, z)

    lo, hi = _root_bounds(s)
    pts = 64 * n + 1
    roots = None
    for attempt in range(4):
        grid = np.geomspace(lo, hi, pts)
        vals = f(grid)[1]
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        exact = np.nonzero(vals == 0)[0]
        if len(idx) + len(exact) == n:
            roots = [_refine(f, grid[i], grid[i + 1], vals[i]) for i in idx]
            roots += [float(grid[i]) for i in exact]
            break
        pts = 4 * (pts - 1) + 1
        hi *= 2.0
    if roots is None:
        raise SpectrumError(
            f"found {len(idx) + len(exact)} sign changes of D on [{lo:.3e}, {hi:.3e}], "
            f"expected {n}"
        )
    z = np.sort(np.array(roots))
    mu = _residues(s, z)
    return SpectralData(z, mu, _gamma(s))


def evolve_spectral(sd: SpectralData, k: int, t: float) -> SpectralData:
    """``mu_j(t) = mu_j(0) exp(t / z_j^k)``; eigenvalues and ``gamma`` unchanged."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if t == 0:
        return sd
    return SpectralData(sd.z, sd.mu * np.exp(t / sd.z**k), sd.gamma)

