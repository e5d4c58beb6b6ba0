"""Gradient flow with surgery on Euclidean model spaces.

A flow runs ``x' = -grad f(x)``. Under ``surgered_flow``, when the trajectory
comes within ``eps`` of a non-terminal point z of the degenerate set G while
the gradient is below the certified floor A(eps), it is snapped to z and
continued along z's restart path, then the flow resumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import RK45, trapezoid

from .errors import (
    AxiomViolation,
    DomainExit,
    PreconditionViolated,
    RestartNotDescending,
    StepFailure,
)
from .paths import PolyPath, SeparatedPointSet, excursion_length

CONVERGED = "converged"
MAX_TIME = "max_time"
BUDGET_EXCEEDED = "surgery_budget_exceeded"
STEP_FAILURE = "step_failure"

# rounding allowance for monotonicity checks, in units of eps * max(1, |f|)
F_ROUNDING = 8.0


def f_slack(fval: float) -> float:
    return F_ROUNDING * np.finfo(float).eps * max(1.0, abs(fval))


@dataclass(frozen=True, eq=False)
class GPoint:
    point: np.ndarray
    f: float
    terminal: bool = False
    name: str = ""


@dataclass(frozen=True, eq=False)
class FlowProblem:
    """Immutable bundle describing one flow model on a domain in R^d."""

    name: str
    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray], bool]
    G: tuple[GPoint, ...]
    N: int
    delta: float
    small_gradient_fn: Callable[[float], float]
    gradient_cap: float
    restart: Callable[[int, float], np.ndarray]
    f_floor: float = -math.inf
    eps_max: float = math.inf

    @property
    def dim(self) -> int:
        return int(self.G[0].point.size) if self.G else 0

    @property
    def separated_set(self) -> SeparatedPointSet:
        return SeparatedPointSet.build([g.point for g in self.G], self.N, self.delta)

    def distances(self, x: np.ndarray) -> np.ndarray:
        if not self.G:
            return np.zeros(0)
        pts = np.array([g.point for g in self.G])
        return np.linalg.norm(pts - x[None, :], axis=1)

    def dist_to_G(self, x: np.ndarray) -> tuple[float, int]:
        d = self.distances(x)
        if d.size == 0:
            return math.inf, -1
        j = int(np.argmin(d))
        return float(d[j]), j


@dataclass(frozen=True)
class StepConfig:
    method: str = "rk45"
    h0: float = 1e-2
    rtol: float = 1e-9
    atol: float = 1e-12
    h_max: float = 0.5
    h_min: float = 1e-12
    max_steps: int = 200_000


@dataclass(frozen=True)
class StopConfig:
    grad_tol: float = 1e-8
    t_max: float = 1e3


@dataclass
class Surgery:
    time: float
    g_index: int
    point: np.ndarray
    detect_point: np.ndarray
    f_before: float
    f_after: float
    path: np.ndarray

    @property
    def drop(self) -> float:
        return self.f_before - self.f_after


@dataclass
class FlowTrace:
    t: np.ndarray
    x: np.ndarray
    f: np.ndarray
    gradnorm: np.ndarray
    event: list[str]
    surgeries: list[Surgery] = field(default_factory=list)
    status: str = CONVERGED
    eps: float | None = None
    model: str = ""

    def __len__(self) -> int:
        return self.t.size

    @property
    def x0(self) -> np.ndarray:
        return self.x[0]

    @property
    def x_end(self) -> np.ndarray:
        return self.x[-1]

    def polyline(self) -> PolyPath:
        return PolyPath.build(self.x)

    def monotone(self) -> bool:
        return all(b <= a + f_slack(a) for a, b in zip(self.f[:-1], self.f[1:]))

    def times_increasing(self) -> bool:
        return bool(np.all(np.diff(self.t) > 0))


class _Buffer:
    def __init__(self):
        self.t: list[float] = []
        self.x: list[np.ndarray] = []
        self.f: list[float] = []
        self.g: list[float] = []
        self.ev: list[str] = []

    def add(self, t, x, f, g, ev=""):
        self.t.append(float(t))
        self.x.append(np.array(x, dtype=float))
        self.f.append(float(f))
        self.g.append(float(g))
        self.ev.append(ev)

    def trace(self, status, surgeries, eps, model) -> FlowTrace:
        return FlowTrace(
            np.array(self.t),
            np.array(self.x),
            np.array(self.f),
            np.array(self.g),
            list(self.ev),
            surgeries,
            status,
            eps,
            model,
        )


class _SegmentEnd(NamedTuple):
    reason: str
    t: float
    x: np.ndarray
    g_index: int


def _check_point(problem: FlowProblem, x: np.ndarray, fx: float) -> None:
    if fx < problem.f_floor - f_slack(problem.f_floor):
        raise AxiomViolation("a", f"f = {fx} below floor {problem.f_floor} at {x}")


def _rk45_segment(problem, t0, x0, step: StepConfig, stop: StopConfig, detect, buf) -> _SegmentEnd:
    def rhs(_t, y):
        return -problem.grad(y)

    def make(t, y, h):
        return RK45(rhs, t, y, stop.t_max, max_step=step.h_max, rtol=step.rtol, atol=step.atol, first_step=h)

    solver = make(t0, x0, min(step.h0, max(stop.t_max - t0, step.h_min)))
    t, x, fx = t0, np.array(x0, dtype=float), problem.f(x0)
    h_next = step.h0
    for _ in range(step.max_steps):
        if t >= stop.t_max:
            return _SegmentEnd(MAX_TIME, t, x, -1)
        msg = solver.step()
        if solver.status == "failed":
            raise StepFailure(f"integrator failed at t={t}: {msg}")
        y = solver.y
        bad = None
        if not problem.domain(y):
            bad = DomainExit
        else:
            fy = problem.f(y)
            if fy > fx + f_slack(fx):
                bad = StepFailure
        if bad is not None:
            h_next = 0.25 * (solver.t - t)
            if h_next < step.h_min:
                kind = "left the domain" if bad is DomainExit else "increased f"
                raise bad(f"step {kind} at t={t} with step below {step.h_min}")
            solver = make(t, x, h_next)
            continue
        t, x, fx = solver.t, y.copy(), fy
        _check_point(problem, x, fx)
        gn = float(np.linalg.norm(problem.grad(x)))
        buf.add(t, x, fx, gn)
        if gn < stop.grad_tol:
            return _SegmentEnd(CONVERGED, t, x, -1)
        j = detect(x, fx, gn)
        if j >= 0:
            return _SegmentEnd("snap", t, x, j)
    raise StepFailure(f"exceeded {step.max_steps} steps")


def _heun_segment(problem, t0, x0, step: StepConfig, stop: StopConfig, detect, buf) -> _SegmentEnd:
    t, x, fx = t0, np.array(x0, dtype=float), problem.f(x0)
    h = step.h0
    for _ in range(step.max_steps):
        rest = stop.t_max - t
        if rest <= 1e-12 * max(1.0, stop.t_max):
            return _SegmentEnd(MAX_TIME, t, x, -1)
        # absorb a rounding sliver into the final step
        hh = rest if rest < h * (1 + 1e-9) else h
        k1 = -problem.grad(x)
        k2 = -problem.grad(x + hh * k1)
        y = x + 0.5 * hh * (k1 + k2)
        if not problem.domain(y):
            raise DomainExit(f"fixed step left the domain at t={t}")
        fy = problem.f(y)
        if fy > fx + f_slack(fx):
            raise StepFailure(f"fixed step increased f at t={t}; reduce h0")
        t = t + hh
        x, fx = y, fy
        _check_point(problem, x, fx)
        gn = float(np.linalg.norm(problem.grad(x)))
        buf.add(t, x, fx, gn)
        if gn < stop.grad_tol:
            return _SegmentEnd(CONVERGED, t, x, -1)
        j = detect(x, fx, gn)
        if j >= 0:
            return _SegmentEnd("snap", t, x, j)
    raise StepFailure(f"exceeded {step.max_steps} steps")


_SEGMENTS = {"rk45": _rk45_segment, "heun": _heun_segment}


def _run(problem, x0, step, stop, detect, buf, t0=0.0) -> _SegmentEnd:
    try:
        seg = _SEGMENTS[step.method]
    except KeyError:
        raise PreconditionViolated(f"unknown integrator {step.method!r}") from None
    return seg(problem, t0, x0, step, stop, detect, buf)


def _start(problem: FlowProblem, x0, step: StepConfig) -> tuple[np.ndarray, float, float]:
    x0 = np.array(x0, dtype=float).ravel()
    if not problem.domain(x0):
        raise PreconditionViolated(f"start point {x0} is outside the domain")
    if not (step.h0 > 0 and step.h_max > 0 and step.h_min > 0):
        raise PreconditionViolated("step sizes must be positive")
    fx = problem.f(x0)
    _check_point(problem, x0, fx)
    return x0, fx, float(np.linalg.norm(problem.grad(x0)))


def integrate_gradient_flow(
    problem: FlowProblem, x0, step: StepConfig | None = None, stop: StopConfig | None = None
) -> FlowTrace:
    step = step or StepConfig()
    stop = stop or StopConfig()
    x0, f0, g0 = _start(problem, x0, step)
    buf = _Buffer()
    buf.add(0.0, x0, f0, g0, "start")
    if g0 < stop.grad_tol:
        return buf.trace(CONVERGED, [], None, problem.name)
    end = _run(problem, x0, step, stop, lambda *_: -1, buf)
    return buf.trace(end.reason, [], None, problem.name)


def energy_identity_residual(trace: FlowTrace) -> float:
    """|f(x_0) - f(x_a) - int |grad f|^2 dt| with the trapezoid rule."""
    if trace.surgeries:
        raise PreconditionViolated("energy identity applies to surgery-free traces only")
    if len(trace) < 2:
        return 0.0
    integral = float(trapezoid(trace.gradnorm**2, trace.t))
    return abs(float(trace.f[0] - trace.f[-1]) - integral)


def surgered_flow(
    problem: FlowProblem,
    x0,
    eps: float,
    budget: int = 16,
    step: StepConfig | None = None,
    stop: StopConfig | None = None,
) -> FlowTrace:
    step = step or StepConfig()
    stop = stop or StopConfig()
    if not 0 < eps <= problem.eps_max:
        raise PreconditionViolated(f"eps must lie in (0, {problem.eps_max}]")
    if budget < 1:
        raise PreconditionViolated("surgery budget must be at least 1")
    A = problem.small_gradient_fn(eps)
    active = [j for j, g in enumerate(problem.G) if not g.terminal]
    pts = np.array([g.point for g in problem.G]) if problem.G else np.zeros((0, 0))

    def detect(x, fx, gn):
        if not active or gn >= A:
            return -1
        d = np.linalg.norm(pts[active] - x[None, :], axis=1)
        k = int(np.argmin(d))
        j = active[k]
        # snapping must not raise f
        if d[k] < eps and fx >= problem.G[j].f:
            return j
        return -1

    x, fx, gn = _start(problem, x0, step)
    buf = _Buffer()
    buf.add(0.0, x, fx, gn, "start")
    surgeries: list[Surgery] = []
    t = 0.0
    j = detect(x, fx, gn)
    end = None
    while True:
        if j < 0:
            if gn < stop.grad_tol:
                return buf.trace(CONVERGED, surgeries, eps, problem.name)
            end = _run(problem, x, step, stop, detect, buf, t0=t)
            if end.reason != "snap":
                return buf.trace(end.reason, surgeries, eps, problem.name)
            t, x, j = end.t, end.x, end.g_index
            fx = buf.f[-1]
        if len(surgeries) >= budget:
            return buf.trace(BUDGET_EXCEEDED, surgeries, eps, problem.name)
        surgeries.append(_surgery(problem, j, t, x, fx, eps, buf))
        t, x = buf.t[-1], buf.x[-1]
        fx, gn = buf.f[-1], buf.g[-1]
        j = detect(x, fx, gn)


def _surgery(problem: FlowProblem, j: int, t: float, x: np.ndarray, fx: float, eps: float, buf: _Buffer) -> Surgery:
    g = problem.G[j]
    z = g.point
    # the infinite-time approach is compressed into a unit-speed segment
    t_snap = t + max(float(np.linalg.norm(x - z)), 1e-12)
    buf.add(t_snap, z, g.f, np.linalg.norm(problem.grad(z)), "snap")
    path = np.asarray(problem.restart(j, eps), dtype=float)
    if path.ndim != 2 or path.shape[0] < 2:
        raise RestartNotDescending(f"restart path for G[{j}] has fewer than two samples")
    prev_f, prev_x, tt = g.f, z, t_snap
    for p in path[1:]:
        if not problem.domain(p):
            raise RestartNotDescending(f"restart path for G[{j}] leaves the domain at {p}")
        fp = problem.f(p)
        if not fp < prev_f:
            raise RestartNotDescending(f"restart path for G[{j}] does not descend at {p}")
        tt += max(float(np.linalg.norm(p - prev_x)), 1e-12)
        buf.add(tt, p, fp, np.linalg.norm(problem.grad(p)), "restart")
        prev_f, prev_x = fp, p
    return Surgery(t, j, z.copy(), x.copy(), fx, prev_f, path)


# -- certificates -------------------------------------------------------------


class FlowCertificate(NamedTuple):
    lhs: float
    rhs: float
    holds: bool
    valid: bool
    A: float
    excursion: float
    energy_bound: float


def crossing_drop(problem: FlowProblem, eps: float, distance: float | None = None) -> float:
    """Guaranteed f drop across a displacement of ``distance`` (default delta)."""
    d = problem.delta if distance is None else distance
    A = problem.small_gradient_fn(eps)
    two_n = 2 * problem.N
    return A * (problem.delta - two_n * eps) / problem.delta * (d - two_n * eps)


def lower_bound_certificate(trace: FlowTrace, eps: float, problem: FlowProblem) -> FlowCertificate:
    """f(x0) - f(x_end) >= A(eps) (delta - 2N eps)/delta (d(x0, x_end) - 2N eps).

    ``valid`` is False when eps >= delta/(2N), where the bound is vacuous.
    Also reports A(eps) times the excursion length of the trace polyline, which
    sits between the two sides when the sampled gradient floor is sharp.
    """
    A = problem.small_gradient_fn(eps)
    two_n = 2 * problem.N
    valid = eps < problem.delta / two_n
    lhs = float(trace.f[0] - trace.f[-1])
    d = float(np.linalg.norm(trace.x_end - trace.x0))
    rhs = A * (problem.delta - two_n * eps) / problem.delta * (d - two_n * eps)
    exc = excursion_length(trace.polyline(), [g.point for g in problem.G], eps) if problem.G else trace.polyline().length
    holds = lhs >= rhs - f_slack(trace.f[0])
    return FlowCertificate(lhs, float(rhs), bool(holds), bool(valid), float(A), exc, float(A * exc))


def surgery_count_check(trace: FlowTrace, v: float, n: int) -> bool:
    if not v > 0:
        raise PreconditionViolated("v must be positive")
    return len(trace.surgeries) <= 2**n * (trace.f[0] / v + 1)


def trace_violations(trace: FlowTrace, problem: FlowProblem, eps: float | None = None) -> list[str]:
    """Invariant checks on a finished trace; an empty list means all hold."""
    out = []
    if not trace.monotone():
        out.append("f increases along the trace")
    if not trace.times_increasing():
        out.append("times are not strictly increasing")
    if np.any(trace.gradnorm > problem.gradient_cap * (1 + 1e-12)):
        out.append("gradient exceeds the cap")
    for s in trace.surgeries:
        if not s.drop > 0:
            out.append(f"surgery at t={s.time} does not lower f")
    for a, b in zip(trace.surgeries[:-1], trace.surgeries[1:]):
        if a.g_index == b.g_index:
            out.append("consecutive surgeries at the same point")
    if eps is not None and problem.G:
        A = problem.small_gradient_fn(eps)
        flow = np.array([e in ("", "start") for e in trace.event])
        far = np.array([problem.dist_to_G(x)[0] >= eps for x in trace.x])
        if np.any(trace.gradnorm[flow & far] < A):
            out.append("gradient below A(eps) away from G")
    return out


def excursion_of(trace: FlowTrace, problem: FlowProblem, eps: float) -> float:
    return excursion_length(trace.polyline(), [g.point for g in problem.G], eps)


def restart_segment(z: np.ndarray, direction: Sequence[float], eps: float, samples: int = 9, reach: float = 0.45) -> np.ndarray:
    """Straight restart path from z of length reach * eps (inside eps/2)."""
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    s = np.linspace(0.0, reach * eps, samples)
    return z[None, :] + s[:, None] * v[None, :]
