"""Drivers behind the command-line interface.

Each driver takes parsed configuration objects and returns plain data;
:mod:`isostring.cli` only handles argument parsing, files and exit codes.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .flows import hamiltonian
from .integrate import FlowState, IntegrationError, StepPolicy, Trajectory, integrate
from .spectral import spectrum, evolve_spectral
from .stieltjes import InversionError, UnsupportedBoundaryError, invert
from .string_model import CH_PEAKON, DiscreteString, FlowSpec, RunParams

__all__ = [
    "DEFAULT_THRESHOLDS",
    "Samples",
    "VerifyReport",
    "RunFailure",
    "simulate",
    "solve_exact",
    "solve_exact_samples",
    "verify",
    "format_samples",
]

DEFAULT_THRESHOLDS = {
    "spectrum": 1e-8,
    "residue": 1e-7,
    "hamiltonian": 1e-8,
    "two_route": 1e-6,
}


@dataclass
class Samples:
    """State table shared by ``simulate`` and ``solve-exact`` output."""

    times: np.ndarray
    positions: np.ndarray
    masses: np.ndarray
    hamiltonian: np.ndarray
    drift_max: np.ndarray
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


class RunFailure(RuntimeError):
    """A driver failed part way; ``partial`` holds the rows produced so far."""

    def __init__(self, kind: str, message: str, partial: Optional[Samples] = None):
        super().__init__(message)
        self.kind = kind
        self.partial = partial

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": str(self)}


def _policy(run: RunParams, tol: Optional[float]) -> StepPolicy:
    if tol is not None:
        return StepPolicy(adaptive_tol=tol)
    if run.dt is not None:
        return StepPolicy(adaptive_tol=None, dt=run.dt)
    return StepPolicy(adaptive_tol=run.adaptive_tol)


def _relative_drift(values: np.ndarray) -> np.ndarray:
    return np.abs(values - values[0]) / abs(values[0])


def _from_trajectory(traj: Trajectory) -> Samples:
    drift = _relative_drift(traj.hamiltonian)
    if traj.eigenvalues is not None:
        drift = np.maximum(drift, traj.spectral_drift)
    info = {"steps": traj.steps, "rejected": traj.rejected, "status": traj.status}
    return Samples(traj.times, traj.positions, traj.masses, traj.hamiltonian, drift, info)


def simulate(string, flow: FlowSpec, run: RunParams, tol: Optional[float] = None,
             field: Optional[Callable] = None) -> tuple[Samples, Trajectory]:
    """Integrate the configured flow; ``drift_max`` combines ``H^(k)`` and spectrum drift.

    Raises
    ------
    RunFailure
        ``kind="integration"`` with the partial samples attached.
    """
    try:
        traj = integrate(FlowState(string), flow, run.t_end, _policy(run, tol),
                         sample_times=run.sample_times, field=field)
    except IntegrationError as exc:
        raise RunFailure("integration", str(exc), _from_trajectory(exc.trajectory)) from exc
    return _from_trajectory(traj), traj


def _check_exact_scope(string, flow: FlowSpec):
    if flow.kernel_kind == CH_PEAKON or not isinstance(string, DiscreteString):
        raise RunFailure("unsupported", "solve-exact supports the string kernel only")
    if flow.rational:
        raise RunFailure("unsupported", "solve-exact supports truncated flows (epsilon = 0) only")
    if string.bc.H != 0:
        raise RunFailure(
            "unsupported",
            f"inversion implemented for H=0 only (finite h or h=inf); got H={string.bc.H}",
        )


def solve_exact(string, flow: FlowSpec, run: RunParams) -> list:
    """Strings reconstructed from the evolved spectral data at each sample time.

    Raises
    ------
    RunFailure
        ``kind="unsupported"`` outside ``H = 0`` truncated string flows;
        ``kind="inversion"`` when a reconstruction is not a valid string,
        with the earlier rows attached.
    """
    _check_exact_scope(string, flow)
    sd0 = spectrum(string)
    out = []
    for t in run.sample_times:
        try:
            out.append(invert(evolve_spectral(sd0, flow.k, t), string.bc))
        except (InversionError, UnsupportedBoundaryError) as exc:
            partial = _samples_from_strings(run.sample_times[: len(out)], out, flow.k, sd0.z)
            raise RunFailure("inversion", f"t={t:.6g}: {exc}", partial) from exc
    return out


def _samples_from_strings(times, strings, k: int, z0=None) -> Samples:
    if not strings:
        return Samples(np.array([]), np.empty((0, 0)), np.empty((0, 0)), np.array([]), np.array([]))
    ham = np.array([hamiltonian(s, k) for s in strings])
    drift = _relative_drift(ham)
    if z0 is not None:
        spec_drift = [np.max(np.abs(spectrum(s).z - z0) / z0) for s in strings]
        drift = np.maximum(drift, spec_drift)
    return Samples(np.asarray(times, float), np.array([s.positions for s in strings]),
                   np.array([s.masses for s in strings]), ham, drift)


def solve_exact_samples(string, flow: FlowSpec, run: RunParams) -> Samples:
    strings = solve_exact(string, flow, run)
    return _samples_from_strings(run.sample_times, strings, flow.k, spectrum(string).z)


@dataclass
class VerifyReport:
    """Per-check errors; ``None`` marks a check that does not apply."""

    spectrum_drift: Optional[list]
    residue_law_error: Optional[list]
    hamiltonian_drift: Optional[float]
    two_route_error: Optional[float]
    passed: bool
    checks: dict
    thresholds: dict
    messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def verify(string, flow: FlowSpec, run: RunParams, thresholds: Optional[dict] = None,
           tol: Optional[float] = None, field: Optional[Callable] = None) -> VerifyReport:
    """Run the integrator (and the spectral route where it applies) and compare.

    Checks: eigenvalue drift (strings), residue law ``mu(t) = mu(0) exp(t / z^k)``
    (truncated string flows), relative ``H^(k)`` drift, and ODE versus
    reconstruction agreement (``H = 0`` truncated string flows).  ``field``
    replaces the vector field, which is how negative controls are built.
    """
    thr = dict(DEFAULT_THRESHOLDS)
    thr.update(thresholds or {})
    unknown = set(thr) - set(DEFAULT_THRESHOLDS)
    if unknown:
        raise ValueError(f"unknown thresholds {sorted(unknown)}")
    messages = []
    try:
        samples, traj = simulate(string, flow, run, tol=tol, field=field)
    except RunFailure as exc:
        return VerifyReport(None, None, None, None, False, {"integration": False}, thr,
                            [f"integration failed: {exc}"])

    is_string = isinstance(string, DiscreteString)
    spec_drift = residue = two_route = None
    checks = {}
    ham = float(np.max(_relative_drift(traj.hamiltonian)))
    checks["hamiltonian"] = ham <= thr["hamiltonian"]

    if is_string:
        sd0 = spectrum(string)
        sds = [sd0] + [spectrum(traj.state(i).string) for i in range(1, len(traj))]
        z = np.array([sd.z for sd in sds])
        spec_drift = np.max(np.abs(z - sd0.z) / sd0.z, axis=0).tolist()
        checks["spectrum"] = max(spec_drift) <= thr["spectrum"]
        if flow.rational:
            messages.append("residue law not checked for epsilon > 0")
        else:
            pred = np.array([evolve_spectral(sd0, flow.k, t).mu for t in traj.times])
            mu = np.array([sd.mu for sd in sds])
            residue = np.max(np.abs(mu / pred - 1.0), axis=0).tolist()
            checks["residue"] = max(residue) <= thr["residue"]
        if string.bc.H == 0 and not flow.rational:
            errs = []
            try:
                for i, t in enumerate(traj.times):
                    r = invert(evolve_spectral(sd0, flow.k, t), string.bc)
                    errs.append(max(np.max(np.abs(traj.positions[i] - r.positions) / r.positions),
                                    np.max(np.abs(traj.masses[i] - r.masses) / r.masses)))
                two_route = float(max(errs))
                checks["two_route"] = two_route <= thr["two_route"]
            except InversionError as exc:
                messages.append(f"reconstruction failed: {exc}")
                checks["two_route"] = False
        else:
            messages.append("two-route comparison needs H = 0 and epsilon = 0")
    else:
        messages.append("peakon run: only the Hamiltonian check applies")

    return VerifyReport(spec_drift, residue, ham, two_route, all(checks.values()), checks,
                        thr, messages)


def _num(v) -> str:
    return repr(float(v))


def format_samples(samples: Samples, fmt: str, error: Optional[dict] = None) -> str:
    """Render rows as CSV (``t,x1..xn,m1..mn,H,drift_max``) or JSON lines.

    A failure is recorded as a final marker row: ``# error {...}`` in CSV,
    ``{"error": ...}`` in JSON lines.
    """
    buf = io.StringIO()
    n = samples.positions.shape[1] if samples.positions.ndim == 2 else 0
    if fmt == "csv":
        cols = (["t"] + [f"x{j}" for j in range(1, n + 1)] + [f"m{j}" for j in range(1, n + 1)]
                + ["H", "drift_max"])
        buf.write(",".join(cols) + "\n")
        for i in range(len(samples)):
            row = ([samples.times[i]] + list(samples.positions[i]) + list(samples.masses[i])
                   + [samples.hamiltonian[i], samples.drift_max[i]])
            buf.write(",".join(_num(v) for v in row) + "\n")
        if error is not None:
            buf.write("# error " + json.dumps(error, sort_keys=True) + "\n")
    elif fmt == "jsonl":
        for i in range(len(samples)):
            rec = {"t": float(samples.times[i]), "x": samples.positions[i].tolist(),
                   "m": samples.masses[i].tolist(), "H": float(samples.hamiltonian[i]),
                   "drift_max": float(samples.drift_max[i])}
            buf.write(json.dumps(rec) + "\n")
        if error is not None:
            buf.write(json.dumps(error, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return buf.getvalue()
