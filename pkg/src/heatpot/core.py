"""Time grids, sampled series and boundary curves shared by all solvers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class OutOfRangeError(ValueError):
    """Query outside the range covered by tabulated data."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing discretisation nodes ``t_0 < t_1 < ... < t_N``."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be finite and strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def start(self) -> float:
        return float(self.nodes[0])

    @property
    def end(self) -> float:
        return float(self.nodes[-1])

    def delta(self, k, l):
        """``t_k - t_l``."""
        return self.nodes[k] - self.nodes[l]

    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def __len__(self):
        return self.nodes.size


def make_uniform_grid(T: float, N: int, start: float = 0.0) -> TimeGrid:
    """Uniform grid on ``[start, T]`` with ``N`` steps."""
    return make_graded_grid(T, N, 1.0, start=start)


def make_graded_grid(T: float, N: int, gamma: float, start: float = 0.0) -> TimeGrid:
    """Grid ``t_k = start + (T - start) (k/N)**gamma``, clustered near ``start``.

    ``gamma = 1`` gives the uniform grid.
    """
    if not (T > start):
        raise ValueError(f"horizon T={T} must exceed the start time {start}")
    if int(N) != N or N < 1:
        raise ValueError(f"step count N={N} must be a positive integer")
    if not gamma >= 1.0:
        raise ValueError(f"grading exponent must be >= 1, got {gamma}")
    N = int(N)
    s = np.arange(N + 1) / N
    if gamma != 1.0:
        s = s**gamma
    nodes = start + (T - start) * s
    nodes[-1] = T
    return TimeGrid(nodes)


@dataclass(frozen=True)
class SampledSeries:
    """Values of a function of time at the nodes of a grid."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != self.grid.nodes.shape:
            raise ValueError(
                f"{values.shape[0] if values.ndim else 0} values for a grid of {len(self.grid)} nodes"
            )
        object.__setattr__(self, "values", values)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def __len__(self):
        return self.values.size

    def __call__(self, t):
        """Piecewise-linear interpolation between nodes."""
        return np.interp(t, self.grid.nodes, self.values)


@dataclass
class SolveReport:
    """Per-step diagnostics of an induction solve."""

    iterations: np.ndarray
    residuals: np.ndarray
    failed_step: Optional[int] = None
    failure_time: Optional[float] = None
    blowup_time: Optional[float] = None
    message: str = ""
    warnings: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.failed_step is None

    @property
    def max_residual(self) -> float:
        r = np.abs(self.residuals[np.isfinite(self.residuals)])
        return float(r.max()) if r.size else 0.0


# ---------------------------------------------------------------------------
# boundary curves


class BoundaryCurve:
    """A moving boundary ``b(t)`` with value and derivative access."""

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.value(t)

    def eval(self, t):
        return self.value(t), self.derivative(t)


@dataclass(frozen=True)
class Flat(BoundaryCurve):
    level: float

    def value(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.level)[()]

    def derivative(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))[()]


@dataclass(frozen=True)
class Linear(BoundaryCurve):
    """``level + slope * t``."""

    level: float
    slope: float

    def value(self, t):
        return self.level + self.slope * np.asarray(t, dtype=float)

    def derivative(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.slope)[()]


@dataclass(frozen=True)
class Sinusoid(BoundaryCurve):
    """``level + amplitude * sin(omega * t)``."""

    level: float
    amplitude: float
    omega: float

    def value(self, t):
        return self.level + self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float))

    def derivative(self, t):
        return self.amplitude * self.omega * np.cos(self.omega * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ExponentialPair(BoundaryCurve):
    """``A exp(-t) + B exp(t)``."""

    A: float
    B: float

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * np.exp(-t) + self.B * np.exp(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return -self.A * np.exp(-t) + self.B * np.exp(t)


class Tabulated(BoundaryCurve):
    """Boundary known at discrete nodes.

    Values between nodes are linearly interpolated. Node derivatives are
    taken from ``derivatives`` when given, otherwise from second-order
    finite differences (central inside, one-sided at the ends).
    """

    def __init__(self, nodes, values, derivatives=None):
        nodes = nodes.nodes if isinstance(nodes, TimeGrid) else nodes
        self.nodes = _frozen(nodes)
        self.values = _frozen(values)
        if self.nodes.shape != self.values.shape or self.nodes.size < 2:
            raise ValueError("nodes and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("tabulation nodes must be strictly increasing")
        if derivatives is None:
            edge = 2 if self.nodes.size > 2 else 1
            derivatives = np.gradient(self.values, self.nodes, edge_order=edge)
        self.derivatives = _frozen(derivatives)

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        span = self.nodes[-1] - self.nodes[0]
        tol = 1e-12 * max(span, abs(self.nodes[-1]))
        if np.any(t < self.nodes[0] - tol) or np.any(t > self.nodes[-1] + tol):
            raise OutOfRangeError(
                f"t outside tabulated range [{self.nodes[0]}, {self.nodes[-1]}]"
            )
        return t

    def value(self, t):
        return np.interp(self._check(t), self.nodes, self.values)[()]

    def derivative(self, t):
        return np.interp(self._check(t), self.nodes, self.derivatives)[()]

    def __repr__(self):
        return f"Tabulated(n={self.nodes.size}, t=[{self.nodes[0]:g}, {self.nodes[-1]:g}])"


def boundary_eval(b: BoundaryCurve, t):
    """``(b(t), b'(t))``."""
    return b.value(t), b.derivative(t)


def parse_boundary(text: str) -> BoundaryCurve:
    """Parse ``flat:L``, ``lin:L,S``, ``sin:L,A,W``, ``exp:A,B`` or ``file:PATH``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "file":
        data = np.loadtxt(rest, delimiter=",", comments="#", ndmin=2)
        if data.shape[1] < 2:
            raise ValueError(f"{rest}: expected two columns t,b")
        return Tabulated(data[:, 0], data[:, 1])
    try:
        args = [float(v) for v in rest.split(",")] if rest else []
    except ValueError as exc:
        raise ValueError(f"bad boundary spec {text!r}") from exc
    ctor = {"flat": (Flat, 1), "lin": (Linear, 2), "sin": (Sinusoid, 3), "exp": (ExponentialPair, 2)}
    if kind not in ctor or len(args) != ctor[kind][1]:
        raise ValueError(f"bad boundary spec {text!r}")
    return ctor[kind][0](*args)
