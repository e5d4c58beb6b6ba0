"""Concrete flow models and numerical certification of their axioms.

The default model lives on ``{(x, y): 0 < x <= 2, |y| <= 2}`` with
``f = x^4 - (1 - 2y^2) x^2 + 1 + y^4``. Its completion adds the stratum
``x = 0``; the degenerate point (0, 0) has f = 1 and the interior minimum
(1/sqrt 2, 0) has f = 3/4.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.optimize import minimize

from .errors import AxiomViolation, PreconditionViolated
from .flow import FlowProblem, GPoint, restart_segment
from .paths import check_separation

SAFETY = 0.95
DATA_DIR = Path(__file__).parent / "data"
DEFAULT_EPS_GRID = (0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35)


@dataclass(frozen=True)
class GridConfig:
    """Sampling resolution for axiom checks. ``geometric`` coordinates are
    spaced geometrically toward their lower bound (used for open boundaries)."""

    points_per_axis: int = 241
    geometric: tuple[int, ...] = ()
    geometric_floor: float = 1e-7
    refine_starts: int = 4
    eps_grid: tuple[float, ...] = DEFAULT_EPS_GRID


@dataclass(frozen=True, eq=False)
class ModelInstance:
    name: str
    dim: int
    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    box: tuple[tuple[float, float], ...]
    open_lower: tuple[bool, ...]
    G: tuple[GPoint, ...]
    N: int
    delta: float
    restart_dirs: dict = field(default_factory=dict)
    f_floor: float = -math.inf
    gradient_cap: float = math.inf
    eps_max: float = math.inf
    analytic_A: Callable[[float], float] | None = None
    grid: GridConfig = GridConfig()

    def domain(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        for xi, (lo, hi), op in zip(x, self.box, self.open_lower):
            if xi > hi or xi < lo or (op and xi <= lo):
                return False
        return True

    def restart(self, j: int, eps: float) -> np.ndarray:
        g = self.G[j]
        if j not in self.restart_dirs:
            raise PreconditionViolated(f"no restart path for G[{j}]")
        return restart_segment(g.point, self.restart_dirs[j], eps)

    def problem(self, small_gradient_fn: Callable[[float], float] | None = None) -> FlowProblem:
        fn = small_gradient_fn or self.analytic_A or certified_small_gradient(self)
        return FlowProblem(
            name=self.name,
            f=self.f,
            grad=self.grad,
            domain=self.domain,
            G=self.G,
            N=self.N,
            delta=self.delta,
            small_gradient_fn=fn,
            gradient_cap=self.gradient_cap,
            restart=self.restart,
            f_floor=self.f_floor,
            eps_max=self.eps_max,
        )


# -- shipped models ---------------------------------------------------------


def _default_f(p) -> float:
    x, y = p[0], p[1]
    return x**4 - (1 - 2 * y * y) * x * x + 1 + y**4


def _default_grad(p) -> np.ndarray:
    x, y = p[0], p[1]
    return np.array([2 * x * (2 * x * x - 1 + 2 * y * y), 4 * y * (x * x + y * y)])


@lru_cache(maxsize=None)
def default_model() -> ModelInstance:
    xbar = math.sqrt(0.5)
    G = (
        GPoint(np.array([0.0, 0.0]), 1.0, False, "stratum"),
        GPoint(np.array([xbar, 0.0]), 0.75, True, "minimum"),
    )
    box = ((0.0, 2.0), (-2.0, 2.0))
    # |grad f| is largest at the far corners of the box
    cap = float(np.linalg.norm(_default_grad((2.0, 2.0))))
    return ModelInstance(
        name="default",
        dim=2,
        f=_default_f,
        grad=_default_grad,
        box=box,
        open_lower=(True, False),
        G=G,
        N=1,
        delta=xbar,
        restart_dirs={0: (1.0, 0.0)},
        f_floor=0.75,
        gradient_cap=cap,
        eps_max=0.35,
        grid=GridConfig(geometric=(0,)),
    )


def quadratic_model(dim: int = 1, radius: float = 2.0) -> ModelInstance:
    """f = |x|^2 on the cube [-radius, radius]^dim; the flow is x0 e^{-2t}."""
    if dim < 1:
        raise PreconditionViolated("dim must be at least 1")
    return ModelInstance(
        name=f"quadratic{dim}" if dim > 1 else "quadratic",
        dim=dim,
        f=lambda p: float(np.dot(p, p)),
        grad=lambda p: 2.0 * np.asarray(p, dtype=float),
        box=tuple((-radius, radius) for _ in range(dim)),
        open_lower=(False,) * dim,
        G=(GPoint(np.zeros(dim), 0.0, True, "minimum"),),
        N=1,
        # a single point is (1, delta)-separated for every delta
        delta=1.0,
        f_floor=0.0,
        gradient_cap=2.0 * radius * math.sqrt(dim),
        eps_max=0.49,
        analytic_A=lambda eps: 2.0 * eps,
    )


def staircase_model() -> ModelInstance:
    """1-D model f = sin x - x whose degenerate critical points 2 pi k are all
    non-terminal, so every run keeps performing surgeries until it leaves the box."""
    return load_manifest(DATA_DIR / "staircase.json")


MODELS = {"default": default_model, "quadratic": quadratic_model, "staircase": staircase_model}


# -- manifest models --------------------------------------------------------


def load_manifest(path: str | Path) -> ModelInstance:
    """Model from JSON: {name, variables, f (expression), box, open_lower,
    G: [{point, f?, terminal, restart}], N, delta, f_floor, eps_max}.

    The gradient is obtained by symbolic differentiation.
    """
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    return model_from_dict(manifest)


def model_from_dict(manifest: dict) -> ModelInstance:
    names = manifest["variables"]
    syms = sp.symbols(names)
    if not isinstance(syms, (list, tuple)):
        syms = (syms,)
    expr = sp.sympify(manifest["f"], locals={n: s for n, s in zip(names, syms)})
    f_l = sp.lambdify([syms], expr, "numpy")
    g_l = sp.lambdify([syms], [sp.diff(expr, s) for s in syms], "numpy")

    def f(p):
        return float(f_l(np.asarray(p, dtype=float)))

    def grad(p):
        return np.asarray(g_l(np.asarray(p, dtype=float)), dtype=float)

    dim = len(syms)
    G, dirs = [], {}
    for j, g in enumerate(manifest.get("G", [])):
        pt = np.asarray(g["point"], dtype=float)
        G.append(GPoint(pt, float(g.get("f", f(pt))), bool(g.get("terminal", False)), g.get("name", "")))
        if "restart" in g:
            dirs[j] = tuple(g["restart"])
    box = tuple(tuple(b) for b in manifest["box"])
    model = ModelInstance(
        name=manifest.get("name", "manifest"),
        dim=dim,
        f=f,
        grad=grad,
        box=box,
        open_lower=tuple(manifest.get("open_lower", [False] * dim)),
        G=tuple(G),
        N=int(manifest.get("N", 1)),
        delta=float(manifest.get("delta", 1.0)),
        restart_dirs=dirs,
        f_floor=float(manifest.get("f_floor", -math.inf)),
        eps_max=float(manifest.get("eps_max", math.inf)),
        grid=GridConfig(points_per_axis=int(manifest.get("grid", 241)), geometric=tuple(manifest.get("geometric", ()))),
    )
    if "gradient_cap" in manifest:
        return replace(model, gradient_cap=float(manifest["gradient_cap"]))
    return replace(model, gradient_cap=_sample_grid(model)[1].max() * 1.05)


def get_model(name_or_path: str) -> ModelInstance:
    if name_or_path in MODELS:
        return MODELS[name_or_path]()
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        return load_manifest(p)
    raise PreconditionViolated(f"unknown model {name_or_path!r}")


# -- axiom certification ----------------------------------------------------


def _axis(model: ModelInstance, i: int, n: int) -> np.ndarray:
    lo, hi = model.box[i]
    if i in model.grid.geometric:
        span = hi - lo
        return lo + np.geomspace(model.grid.geometric_floor * span, span, n)
    if model.open_lower[i]:
        return np.linspace(lo, hi, n + 1)[1:]
    return np.linspace(lo, hi, n)


def _sample_grid(model: ModelInstance):
    n = model.grid.points_per_axis if model.dim <= 2 else max(9, int(round(2e5 ** (1 / model.dim))))
    axes = [_axis(model, i, n) for i in range(model.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.dim)
    fv = np.array([model.f(p) for p in pts])
    gn = np.linalg.norm(np.array([model.grad(p) for p in pts]), axis=1)
    return pts, gn, fv


def _dist_to_G(model: ModelInstance, pts: np.ndarray) -> np.ndarray:
    if not model.G:
        return np.full(pts.shape[0], np.inf)
    gp = np.array([g.point for g in model.G])
    return np.min(np.linalg.norm(pts[:, None, :] - gp[None, :, :], axis=2), axis=1)


def _refine(model: ModelInstance, starts: np.ndarray, eps: float) -> float:
    """Local minimization of |grad f|^2 outside the eps-neighbourhoods."""
    bounds = []
    for i, (lo, hi) in enumerate(model.box):
        if model.open_lower[i]:
            lo = lo + model.grid.geometric_floor * (hi - lo)
        bounds.append((lo, hi))
    cons = [
        {"type": "ineq", "fun": (lambda p, z=g.point: float(np.dot(p - z, p - z)) - eps * eps)}
        for g in model.G
    ]
    best = math.inf
    for x0 in starts:
        res = minimize(
            lambda p: float(np.dot(model.grad(p), model.grad(p))),
            x0,
            method="SLSQP",
            bounds=bounds,
            constraints=cons,
            options={"ftol": 1e-14, "maxiter": 200},
        )
        p = np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds])
        if _dist_to_G(model, p[None, :])[0] >= eps * (1 - 1e-9):
            best = min(best, float(np.linalg.norm(model.grad(p))))
    return best


def sampled_gradient_floor(model: ModelInstance, eps: float, samples=None) -> float:
    """Minimum gradient norm found at distance >= eps from G (grid plus local
    refinement), before the safety factor."""
    pts, gn, _ = samples if samples is not None else _sample_grid(model)
    far = _dist_to_G(model, pts) >= eps
    if not np.any(far):
        return math.inf
    idx = np.flatnonzero(far)
    order = idx[np.argsort(gn[idx])[: model.grid.refine_starts]]
    return min(float(gn[order[0]]), _refine(model, pts[order], eps))


def small_gradient_table(model: ModelInstance, eps_grid: Sequence[float] | None = None, samples=None) -> list[tuple[float, float]]:
    eps_grid = sorted(eps_grid or model.grid.eps_grid)
    samples = samples if samples is not None else _sample_grid(model)
    return [(float(e), SAFETY * sampled_gradient_floor(model, e, samples)) for e in eps_grid]


class StepFunction:
    """eps -> A(eps), the certified value at the largest tabulated eps' <= eps."""

    def __init__(self, table: Sequence[tuple[float, float]]):
        self.table = sorted(table)
        # enforce monotonicity so coarser eps never certifies a smaller floor
        run = 0.0
        fixed = []
        for e, a in self.table:
            run = max(run, a)
            fixed.append((e, run))
        self.table = fixed

    def __call__(self, eps: float) -> float:
        best = 0.0
        for e, a in self.table:
            if e <= eps:
                best = a
        return best


@lru_cache(maxsize=None)
def _cached_table(model: ModelInstance) -> tuple[tuple[float, float], ...]:
    return tuple(small_gradient_table(model))


def certified_small_gradient(model: ModelInstance) -> StepFunction:
    return StepFunction(_cached_table(model))


@dataclass
class AxiomReport:
    model: str
    passed: dict[str, bool]
    details: dict[str, object]
    table: list[tuple[float, float]]
    grid: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "passed": self.passed,
            "details": self.details,
            "A_table": [{"eps": e, "A": a} for e, a in self.table],
            "grid": self.grid,
        }


CRITICAL_FLOOR = 1e-7
FD_RTOL = 1e-6


OPEN_FACE_DEPTH = 1e-4


def open_face_floors(model: ModelInstance, pts: np.ndarray, eps_grid: Sequence[float]) -> list[float]:
    """Gradient floor per eps on copies of the innermost sample layer pushed
    OPEN_FACE_DEPTH times closer to each open lower face."""
    probes = []
    for i, (lo, _) in enumerate(model.box):
        if not model.open_lower[i]:
            continue
        first = pts[:, i].min()
        layer = pts[pts[:, i] == first].copy()
        layer[:, i] = lo + (first - lo) * OPEN_FACE_DEPTH
        probes.append(layer)
    if not probes:
        return [math.inf] * len(eps_grid)
    probe = np.concatenate(probes)
    gn = np.linalg.norm(np.array([model.grad(p) for p in probe]), axis=1)
    dist = _dist_to_G(model, probe)
    return [float(gn[dist >= e].min()) if np.any(dist >= e) else math.inf for e in eps_grid]


def gradient_fd_error(model: ModelInstance, pts: np.ndarray, count: int = 200) -> float:
    """Largest central-difference mismatch of grad, relative to max(1, |grad|),
    over an evenly strided subsample of ``pts``."""
    idx = np.linspace(0, len(pts) - 1, min(count, len(pts))).astype(int)
    worst = 0.0
    for x in pts[idx]:
        g = np.asarray(model.grad(x), dtype=float)
        fd = np.empty(model.dim)
        for i in range(model.dim):
            h = 1e-5 * max(1.0, abs(x[i]))
            e = np.zeros(model.dim)
            e[i] = h
            fd[i] = (model.f(x + e) - model.f(x - e)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(fd - g)) / max(1.0, float(np.linalg.norm(g))))
    return worst


def validate_axioms(model: ModelInstance, grid: GridConfig | None = None, raise_on_failure: bool = True) -> AxiomReport:
    """Numerically certify (a) the floor, (c) the gradient cap, (e-1) the
    gradient floor away from G, (e-2) separation of G and (e-3) descent
    along every restart path."""
    if grid is not None:
        model = replace(model, grid=grid)
    samples = _sample_grid(model)
    pts, gn, fv = samples
    passed, details = {}, {}

    fmin = float(fv.min())
    passed["a"] = fmin >= model.f_floor - 1e-12 * max(1.0, abs(model.f_floor))
    details["a"] = {"sampled_min": fmin, "floor": model.f_floor}

    gmax = float(gn.max())
    passed["c"] = bool(gmax <= model.gradient_cap * (1 + 1e-12))
    details["c"] = {"sampled_max": gmax, "cap": model.gradient_cap}

    fd_err = gradient_fd_error(model, pts)
    passed["grad"] = fd_err < FD_RTOL
    details["grad"] = {"max_fd_error": fd_err, "rtol": FD_RTOL}

    table = small_gradient_table(model, samples=samples)
    raw = [a / SAFETY for _, a in table]
    deep = open_face_floors(model, pts, [e for e, _ in table])
    # a floor that keeps shrinking toward an open face is not attained
    leaks = [e for (e, _), r, d in zip(table, raw, deep) if d < 0.5 * r]
    passed["e-1"] = all(a > CRITICAL_FLOOR for a in raw) and not leaks
    details["e-1"] = {"min_raw": min(raw) if raw else None, "open_face_leaks": leaks}
    if model.analytic_A is not None:
        ok = all(model.analytic_A(e) <= a / SAFETY * (1 + 1e-6) for (e, _), a in zip(table, [r * SAFETY for r in raw]))
        passed["e-1"] = passed["e-1"] and ok
        details["e-1"]["analytic_consistent"] = ok

    gpts = [g.point for g in model.G]
    passed["e-2"] = check_separation(gpts, model.N, model.delta) if gpts else True
    details["e-2"] = {"N": model.N, "delta": model.delta}

    e3 = {}
    for j, g in enumerate(model.G):
        if g.terminal:
            continue
        try:
            path = model.restart(j, min(model.eps_max, 0.1))
        except PreconditionViolated:
            e3[j] = False
            continue
        fvals = np.array([model.f(p) for p in path[1:]])
        inside = all(model.domain(p) for p in path[1:])
        e3[j] = bool(inside and np.all(fvals < g.f) and np.all(np.diff(np.concatenate([[g.f], fvals])) < 0))
    passed["e-3"] = all(e3.values())
    details["e-3"] = {str(k): v for k, v in e3.items()}

    report = AxiomReport(
        model.name,
        passed,
        details,
        table,
        {"points_per_axis": model.grid.points_per_axis, "geometric": list(model.grid.geometric), "samples": int(pts.shape[0])},
    )
    if raise_on_failure and not report.ok:
        item = next(k for k, v in passed.items() if not v)
        raise AxiomViolation(item, json.dumps(details[item], default=str))
    return report
