"""Discrete strings, peakon configurations, flow specifications and config I/O.

A discrete string is a finite set of point masses ``m_j`` at positions
``0 < x_1 < ... < x_n < 1`` together with Robin boundary coefficients
``(h, H)``.  Either coefficient may be ``math.inf`` (Dirichlet end); all
downstream formulas branch on ``math.isinf`` rather than substituting a
large number.

Configuration documents are TOML with three sections::

    [string]
    positions = [0.5]
    masses = [1.0]
    h = 1.0
    H = "inf"          # numbers or the literal "inf"

    [flow]
    k = 1
    epsilon = 0.0
    kernel = "string"  # or "ch_peakon"

    [run]
    t_end = 1.0
    adaptive_tol = 1e-10   # exactly one of adaptive_tol / dt
    sample_times = [0.0, 0.5, 1.0]
    output = "trajectory.csv"
    format = "csv"         # or "jsonl"
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

__all__ = [
    "BoundaryConditions",
    "DiscreteString",
    "PeakonString",
    "FlowSpec",
    "RunParams",
    "ConfigError",
    "ValidationError",
    "validate",
    "load_config",
    "dump_config",
    "STRING",
    "CH_PEAKON",
]

STRING = "string"
CH_PEAKON = "ch_peakon"


class ValidationError(ValueError):
    """Raised when an object violates one or more model invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConfigError(ValueError):
    """Raised for malformed configuration documents."""


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BoundaryConditions:
    """Robin coefficients ``v_x(0) - h v(0) = 0`` and ``v_x(1) + H v(1) = 0``."""

    h: float
    H: float

    @property
    def h_inf(self) -> bool:
        return math.isinf(self.h)

    @property
    def H_inf(self) -> bool:
        return math.isinf(self.H)

    def violations(self) -> list[str]:
        out = []
        for name, val in (("h", self.h), ("H", self.H)):
            if math.isnan(val):
                out.append(f"{name} is NaN")
            elif val < 0:
                out.append(f"{name} must be nonnegative (got {val})")
        if self.h == 0 and self.H == 0:
            out.append("(h,H)=(0,0) excluded")
        return out


@dataclass(frozen=True)
class DiscreteString:
    """Point masses on the unit interval with boundary conditions."""

    positions: np.ndarray
    masses: np.ndarray
    bc: BoundaryConditions

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen_array(self.positions))
        object.__setattr__(self, "masses", _frozen_array(self.masses))

    @classmethod
    def from_gaps(cls, gaps, masses, bc: BoundaryConditions) -> "DiscreteString":
        """Build a string from ``l_0, ..., l_{n-1}`` (``l_n`` is implied)."""
        gaps = np.asarray(gaps, dtype=float)
        return cls(np.cumsum(gaps), masses, bc)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def gaps(self) -> np.ndarray:
        """``l_j = x_{j+1} - x_j`` for j = 0..n with ``x_0 = 0``, ``x_{n+1} = 1``."""
        return np.diff(np.concatenate(([0.0], self.positions, [1.0])))

    def with_state(self, positions, masses) -> "DiscreteString":
        return DiscreteString(positions, masses, self.bc)


@dataclass(frozen=True)
class PeakonString:
    """Peakon configuration on the real line (no boundary conditions)."""

    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen_array(self.positions))
        object.__setattr__(self, "masses", _frozen_array(self.masses))

    @property
    def n(self) -> int:
        return len(self.positions)

    def with_state(self, positions, masses) -> "PeakonString":
        return PeakonString(positions, masses)


AnyString = Union[DiscreteString, PeakonString]


@dataclass(frozen=True)
class FlowSpec:
    """Flow order ``k``, rational shift ``epsilon`` (0 = truncated) and kernel."""

    k: int = 1
    epsilon: float = 0.0
    kernel_kind: str = STRING

    def __post_init__(self):
        errors = []
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            errors.append(f"flow order k must be a positive integer (got {self.k})")
        if not (self.epsilon >= 0) or math.isinf(self.epsilon):
            errors.append(f"epsilon must be a finite nonnegative real (got {self.epsilon})")
        if self.kernel_kind not in (STRING, CH_PEAKON):
            errors.append(f"unknown kernel {self.kernel_kind!r}")
        elif self.kernel_kind == CH_PEAKON and self.epsilon != 0:
            errors.append("ch_peakon kernel requires epsilon = 0")
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def rational(self) -> bool:
        return self.epsilon > 0


@dataclass(frozen=True)
class RunParams:
    """Integration horizon, step policy and output settings."""

    t_end: float = 1.0
    dt: Optional[float] = None
    adaptive_tol: Optional[float] = None
    sample_times: tuple = field(default=())
    output: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        errors = []
        if not (self.t_end >= 0) or math.isinf(self.t_end):
            errors.append(f"t_end must be finite and >= 0 (got {self.t_end})")
        if (self.dt is None) == (self.adaptive_tol is None):
            errors.append("exactly one of run.dt / run.adaptive_tol must be set")
        if self.dt is not None and not self.dt > 0:
            errors.append(f"dt must be positive (got {self.dt})")
        if self.adaptive_tol is not None and not self.adaptive_tol > 0:
            errors.append(f"adaptive_tol must be positive (got {self.adaptive_tol})")
        if self.format not in ("csv", "jsonl"):
            errors.append(f"format must be 'csv' or 'jsonl' (got {self.format!r})")
        samples = tuple(float(t) for t in self.sample_times)
        if not samples:
            samples = tuple(np.linspace(0.0, self.t_end, 11)) if self.t_end > 0 else (0.0,)
        if any(t < 0 or t > self.t_end for t in samples):
            errors.append("sample_times must lie in [0, t_end]")
        if any(b <= a for a, b in zip(samples, samples[1:])):
            errors.append("sample_times must be strictly increasing")
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, "sample_times", samples)


def validate(s: AnyString) -> list[str]:
    """Return the list of violated invariants of ``s`` (empty when valid)."""
    out = []
    x, m = s.positions, s.masses
    if len(x) != len(m):
        out.append(f"{len(x)} positions but {len(m)} masses")
        return out
    if len(x) == 0:
        out.append("at least one mass is required")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(m)):
        out.append("positions and masses must be finite")
        return out
    if np.any(np.diff(x) <= 0):
        out.append("positions not increasing")
    if np.any(m <= 0):
        out.append("masses must be positive")
    if isinstance(s, DiscreteString):
        if len(x) and (x[0] <= 0 or x[-1] >= 1):
            out.append("positions must lie in the open interval (0, 1)")
        out.extend(s.bc.violations())
    return out


def check(s: AnyString) -> AnyString:
    """Raise :class:`ValidationError` unless ``s`` is valid."""
    errs = validate(s)
    if errs:
        raise ValidationError(errs)
    return s


_SCHEMA = {
    "string": {"positions", "masses", "h", "H"},
    "flow": {"k", "epsilon", "kernel"},
    "run": {"t_end", "dt", "adaptive_tol", "sample_times", "output", "format"},
}


def _number(value, where: str) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ConfigError(f"{where}: expected a number or \"inf\", got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _number_list(value, where: str) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected an array")
    return [_number(v, f"{where}[{i}]") for i, v in enumerate(value)]


def load_config(text: str):
    """Parse a TOML configuration document.

    Returns
    -------
    (string, flow, run) : (DiscreteString | PeakonString, FlowSpec, RunParams)

    Raises
    ------
    ConfigError
        Syntax errors (with line/column from the TOML parser), unknown
        sections/keys and wrongly typed fields.
    ValidationError
        When the parsed objects violate model invariants; every violation
        is listed.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from exc

    unknown = [f"{sec}" for sec in doc if sec not in _SCHEMA]
    for sec, keys in _SCHEMA.items():
        body = doc.get(sec, {})
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec}] must be a table")
        unknown += [f"{sec}.{key}" for key in body if key not in keys]
    if unknown:
        raise ConfigError("unknown keys: " + ", ".join(unknown))
    if "string" not in doc:
        raise ConfigError("missing [string] section")

    st, fl, rn = doc["string"], doc.get("flow", {}), doc.get("run", {})
    for key in ("positions", "masses"):
        if key not in st:
            raise ConfigError(f"missing string.{key}")
    kernel = fl.get("kernel", STRING)
    if not isinstance(kernel, str):
        raise ConfigError("flow.kernel: expected a string")
    k = fl.get("k", 1)
    if isinstance(k, bool) or not isinstance(k, int):
        raise ConfigError(f"flow.k: expected an integer, got {k!r}")

    violations = []
    try:
        flow = FlowSpec(k, _number(fl.get("epsilon", 0.0), "flow.epsilon"), kernel)
    except ValidationError as exc:
        violations += exc.violations
        flow = None

    positions = _number_list(st["positions"], "string.positions")
    masses = _number_list(st["masses"], "string.masses")
    if kernel == CH_PEAKON:
        extra = [f"string.{key}" for key in ("h", "H") if key in st]
        if extra:
            violations.append(f"{', '.join(extra)} not allowed for ch_peakon kernel")
        string = PeakonString(positions, masses)
    else:
        for key in ("h", "H"):
            if key not in st:
                raise ConfigError(f"missing string.{key}")
        bc = BoundaryConditions(_number(st["h"], "string.h"), _number(st["H"], "string.H"))
        string = DiscreteString(positions, masses, bc)
    violations += validate(string)

    run_kwargs = {}
    for key in ("t_end", "dt", "adaptive_tol"):
        if key in rn:
            run_kwargs[key] = _number(rn[key], f"run.{key}")
    if "sample_times" in rn:
        run_kwargs["sample_times"] = tuple(_number_list(rn["sample_times"], "run.sample_times"))
    for key in ("output", "format"):
        if key in rn:
            if not isinstance(rn[key], str):
                raise ConfigError(f"run.{key}: expected a string")
            run_kwargs[key] = rn[key]
    if "dt" not in run_kwargs and "adaptive_tol" not in run_kwargs:
        run_kwargs["adaptive_tol"] = 1e-10
    try:
        run = RunParams(**run_kwargs)
    except ValidationError as exc:
        violations += exc.violations
        run = None

    if violations:
        raise ValidationError(violations)
    return string, flow, run


def _encode(value: float):
    return "inf" if math.isinf(value) else float(value)


def dump_config(string: AnyString, flow: FlowSpec, run: RunParams) -> str:
    """Serialize objects to a TOML document accepted by :func:`load_config`."""
    st = {
        "positions": [float(v) for v in string.positions],
        "masses": [float(v) for v in string.masses],
    }
    if isinstance(string, DiscreteString):
        st["h"] = _encode(string.bc.h)
        st["H"] = _encode(string.bc.H)
    rn = {"t_end": float(run.t_end), "sample_times": [float(t) for t in run.sample_times],
          "format": run.format}
    if run.dt is not None:
        rn["dt"] = float(run.dt)
    if run.adaptive_tol is not None:
        rn["adaptive_tol"] = float(run.adaptive_tol)
    if run.output is not None:
        rn["output"] = run.output
    doc = {
        "string": st,
        "flow": {"k": flow.k, "epsilon": flow.epsilon, "kernel": flow.kernel_kind},
        "run": rn,
    }
    return tomli_w.dumps(doc)
