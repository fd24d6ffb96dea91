"""Deterministic ODE integration of the flows.

Adaptive Dormand-Prince 5(4) with step rejection whenever a trial state
leaves the admissible set (ordering, positivity, unit interval), plus a
fixed-step classical RK4 mode.  Outputs at requested sample times come
from the fourth-order continuous extension of the accepted step that
contains them (cubic Hermite in the fixed-step mode).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .flows import hamiltonian, vector_field
from .string_model import DiscreteString, FlowSpec, validate

__all__ = ["StepPolicy", "FlowState", "Trajectory", "IntegrationError", "integrate"]

log = logging.getLogger(__name__)

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# continuous extension: y(t + s h) = y + h * K^T (P @ [s, s^2, s^3, s^4])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass(frozen=True)
class StepPolicy:
    """Either ``adaptive_tol`` (DP5(4), rtol = atol) or a fixed ``dt`` (RK4)."""

    adaptive_tol: Optional[float] = 1e-10
    dt: Optional[float] = None
    h_min: float = 1e-13
    max_steps: int = 500_000

    def __post_init__(self):
        if self.dt is not None:
            object.__setattr__(self, "adaptive_tol", None)
        if self.adaptive_tol is None and self.dt is None:
            raise ValueError("StepPolicy needs adaptive_tol or dt")


@dataclass(frozen=True)
class FlowState:
    string: object
    t: float = 0.0


@dataclass
class Trajectory:
    """States at the sample times plus conservation diagnostics."""

    times: np.ndarray
    positions: np.ndarray
    masses: np.ndarray
    template: object
    spec: FlowSpec
    steps: int = 0
    rejected: int = 0
    hamiltonian: Optional[np.ndarray] = None
    eigenvalues: Optional[np.ndarray] = None
    status: str = "ok"
    messages: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> FlowState:
        return FlowState(self.template.with_state(self.positions[i], self.masses[i]),
                         float(self.times[i]))

    @property
    def final(self) -> FlowState:
        return self.state(len(self.times) - 1)

    @property
    def hamiltonian_drift(self) -> float:
        H = self.hamiltonian
        if H is None or len(H) == 0:
            return float("nan")
        return float(np.max(np.abs(H - H[0])) / abs(H[0]))

    @property
    def spectral_drift(self) -> np.ndarray:
        """Per-sample max relative eigenvalue drift against the first sample."""
        if self.eigenvalues is None:
            return np.full(len(self.times), np.nan)
        z = self.eigenvalues
        return np.max(np.abs(z - z[0]) / np.abs(z[0]), axis=1)


class IntegrationError(RuntimeError):
    """Integration aborted; ``trajectory`` holds the samples reached so far."""

    def __init__(self, message: str, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def integrate(
    state: FlowState,
    spec: FlowSpec,
    t_end: float,
    policy: StepPolicy = StepPolicy(),
    sample_times: Optional[Sequence[float]] = None,
    field: Optional[Callable] = None,
    diagnostics: bool = True,
) -> Trajectory:
    """Integrate the flow ``spec`` from ``state`` to ``t_end``.

    Parameters
    ----------
    state : FlowState
        Initial configuration and time.
    spec : FlowSpec
        Flow order, rational shift and kernel.
    t_end : float
        Final time, ``>= state.t``.
    policy : StepPolicy
        Tolerance or fixed step.
    sample_times : sequence of float, optional
        Output times in ``[state.t, t_end]``; defaults to both endpoints.
    field : callable, optional
        Replacement for :func:`vector_field`, called as ``field(string)``;
        used for negative controls.
    diagnostics : bool
        Record ``H^(k)`` (and, for strings, the spectrum) at every sample.

    Returns
    -------
    Trajectory

    Raises
    ------
    IntegrationError
        On collisions, sign changes of masses or step-size underflow.  The
        partial trajectory is attached.
    """
    t0 = float(state.t)
    if t_end < t0:
        raise ValueError("t_end must be >= state.t")
    errs = validate(state.string)
    if errs:
        raise ValueError("invalid initial state: " + "; ".join(errs))
    template = state.string
    n = template.n
    if field is None:
        def field(s):
            return vector_field(s, spec)

    samples = np.array(sorted(set([t0, t_end] if sample_times is None else sample_times)), float)
    if len(samples) and (samples[0] < t0 - 1e-15 or samples[-1] > t_end + 1e-15):
        raise ValueError("sample_times outside [state.t, t_end]")

    def unpack(y):
        return template.with_state(y[:n], y[n:])

    def admissible(y):
        return not validate(unpack(y))

    def rhs(y):
        xd, md = field(unpack(y))
        return np.concatenate((xd, md))

    out_t, out_y = [], []
    y = np.concatenate((template.positions, template.masses))
    f = rhs(y)
    t = t0
    traj_info = {"steps": 0, "rejected": 0}

    def emit_until(t_lo, y_lo, f_lo, t_hi, y_hi, f_hi, idx, stages=None):
        while idx < len(samples) and samples[idx] <= t_hi + 1e-14:
            ts = samples[idx]
            if ts <= t_lo:
                yv = y_lo.copy()
            elif ts >= t_hi:
                yv = y_hi.copy()
            elif stages is not None:
                step = t_hi - t_lo
                theta = (ts - t_lo) / step
                Q = np.array(stages).T @ _P
                yv = y_lo + step * Q @ (theta ** np.arange(1, 5))
            else:
                yv = _hermite(t_lo, y_lo, f_lo, t_hi, y_hi, f_hi, ts)
            out_t.append(ts)
            out_y.append(yv)
            idx += 1
        return idx

    def build(status="ok", messages=()):
        ys = np.array(out_y).reshape(len(out_y), 2 * n)
        traj = Trajectory(np.array(out_t), ys[:, :n], ys[:, n:], template, spec,
                          traj_info["steps"], traj_info["rejected"], status=status,
                          messages=list(messages))
        if diagnostics and len(out_t):
            _diagnose(traj)
        return traj

    idx = emit_until(t0, y, f, t0, y, f, 0)
    if t_end == t0:
        return build()

    def fail(msg):
        log.warning("integration aborted: %s", msg)
        raise IntegrationError(msg, build("error", [msg]))

    if policy.dt is not None:
        h = policy.dt
        while t < t_end - 1e-15 * max(1.0, abs(t_end)):
            step = min(h, t_end - t)
            try:
                k1 = f
                k2 = rhs(y + 0.5 * step * k1)
                k3 = rhs(y + 0.5 * step * k2)
                k4 = rhs(y + step * k3)
                y_new = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                ok = admissible(y_new)
            except ValueError:
                ok = False
            if not ok:
                fail(f"invariant violated in fixed step at t={t:.6g} (collision or mass sign change)")
            f_new = rhs(y_new)
            traj_info["steps"] += 1
            idx = emit_until(t, y, f, t + step, y_new, f_new, idx)
            t, y, f = t + step, y_new, f_new
            if traj_info["steps"] > policy.max_steps:
                fail("maximum number of steps exceeded")
        return build()

    tol = policy.adaptive_tol
    span = t_end - t0
    sc = tol + tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / sc) ** 2))
    d1 = np.sqrt(np.mean((f / sc) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, span)
    while t < t_end:
        if traj_info["steps"] + traj_info["rejected"] > policy.max_steps:
            fail("maximum number of steps exceeded")
        h = min(h, t_end - t)
        if h < policy.h_min * max(1.0, abs(t)):
            fail(f"step size underflow at t={t:.6g}: tolerance not met or "
                 f"state left the admissible set (collision / mass sign change)")
        ks = [f]
        ok = True
        try:
            for i in range(1, 7):
                yi = y + h * sum(a * kk for a, kk in zip(_A[i], ks))
                if not admissible(yi):
                    ok = False
                    break
                ks.append(rhs(yi))
        except (ValueError, np.linalg.LinAlgError):
            ok = False
        if not ok:
            traj_info["rejected"] += 1
            h *= 0.25
            continue
        y_new = y + h * sum(b * kk for b, kk in zip(_B5, ks) if b != 0.0)
        err_vec = h * sum(e * kk for e, kk in zip(_E, ks) if e != 0.0)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            f_new = ks[6]
            traj_info["steps"] += 1
            t_new = t_end if t_end - (t + h) <= 1e-15 * max(1.0, abs(t_end)) else t + h
            idx = emit_until(t, y, f, t_new, y_new, f_new, idx, ks)
            t, y, f = t_new, y_new, f_new
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= fac
        else:
            traj_info["rejected"] += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return build()


def _diagnose(traj: Trajectory) -> None:
    k = traj.spec.k
    states = [traj.state(i).string for i in range(len(traj.times))]
    traj.hamiltonian = np.array([hamiltonian(s, k) for s in states])
    if isinstance(traj.template, DiscreteString):
        from .spectral import spectrum

        try:
            traj.eigenvalues = np.array([spectrum(s).z for s in states])
        except Exception as exc:  # diagnostics must not mask the trajectory
            traj.messages.append(f"spectrum diagnostic failed: {exc}")
