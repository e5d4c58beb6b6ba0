"""Polylines in R^d, separated point sets and excursion-length accounting.

Paths are parametrized by normalized arclength t in [0, 1]. Neighbourhoods
of the points in Z are closed balls, so tangency counts as inside.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import networkx as nx
import numpy as np

from .errors import PreconditionViolated, SizeLimit

SEPARATION_CAP = 256


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise PreconditionViolated("points must be a list of coordinate vectors")
    return arr


def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


# -- separation ---------------------------------------------------------------


def check_separation(points, N: int, delta: float, cap: int = SEPARATION_CAP) -> bool:
    """True iff every N+1 of the points include a pair at distance >= delta.

    Equivalently the graph joining points closer than delta has no clique of
    size N+1.
    """
    if not delta > 0:
        raise PreconditionViolated("delta must be positive")
    if N < 1:
        raise PreconditionViolated("N must be at least 1")
    pts = _as_points(points) if len(points) else np.zeros((0, 1))
    k = pts.shape[0]
    if k > cap:
        raise SizeLimit(f"{k} points exceeds brute-force cap {cap}")
    if k <= N:
        return True
    close = _pairwise(pts) < delta
    # pigeonhole: a point with fewer than N close neighbours is in no bad clique
    degree = close.sum(axis=1) - 1
    keep = np.flatnonzero(degree >= N)
    if keep.size <= N:
        return True
    g = nx.Graph()
    g.add_nodes_from(keep.tolist())
    for i, j in itertools.combinations(keep.tolist(), 2):
        if close[i, j]:
            g.add_edge(i, j)
    return all(len(c) <= N for c in nx.find_cliques(g))


def check_separation_exhaustive(points, N: int, delta: float) -> bool:
    """Direct enumeration of all (N+1)-subsets."""
    pts = _as_points(points)
    dist = _pairwise(pts)
    for sub in itertools.combinations(range(pts.shape[0]), N + 1):
        if all(dist[i, j] < delta for i, j in itertools.combinations(sub, 2)):
            return False
    return True


def max_separation_delta(points, N: int) -> float:
    """Largest delta for which the points are (N, delta)-separated: the
    smallest diameter over all (N+1)-subsets."""
    pts = _as_points(points)
    if pts.shape[0] <= N:
        return math.inf
    dist = _pairwise(pts)
    best = math.inf
    for sub in itertools.combinations(range(pts.shape[0]), N + 1):
        diam = max(dist[i, j] for i, j in itertools.combinations(sub, 2))
        best = min(best, diam)
    return best


@dataclass(frozen=True, eq=False)
class SeparatedPointSet:
    points: np.ndarray
    N: int
    delta: float

    @classmethod
    def build(cls, points, N: int, delta: float, verify: bool = True) -> "SeparatedPointSet":
        pts = _as_points(points) if len(points) else np.zeros((0, 1))
        if verify and not check_separation(pts, N, delta):
            raise PreconditionViolated(f"points are not ({N}, {delta})-separated")
        return cls(pts, int(N), float(delta))

    def __len__(self) -> int:
        return self.points.shape[0]


# -- paths ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolyPath:
    vertices: np.ndarray

    @classmethod
    def build(cls, vertices) -> "PolyPath":
        v = _as_points(vertices)
        if v.shape[0] < 1:
            raise PreconditionViolated("path needs at least one vertex")
        return cls(v)

    @cached_property
    def segment_lengths(self) -> np.ndarray:
        d = np.diff(self.vertices, axis=0)
        return np.sqrt(np.sum(d * d, axis=1))

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1]

    def point_at(self, t: float) -> np.ndarray:
        """Point at normalized arclength t."""
        L = self.length
        if L == 0:
            return self.vertices[0].copy()
        s = min(max(t, 0.0), 1.0) * L
        i = int(np.searchsorted(self.cumulative, s, side="right") - 1)
        i = min(i, self.segment_lengths.size - 1)
        seg = self.segment_lengths[i]
        u = 0.0 if seg == 0 else (s - self.cumulative[i]) / seg
        return self.vertices[i] + u * (self.vertices[i + 1] - self.vertices[i])


def _segment_ball(p: np.ndarray, q: np.ndarray, z: np.ndarray, eps: float):
    """Parameter interval [a, b] within [0, 1] where the segment lies in the
    closed eps-ball about z, or None."""
    d = q - p
    w = p - z
    A = float(d @ d)
    B = 2.0 * float(d @ w)
    C = float(w @ w) - eps * eps
    if A == 0:
        return (0.0, 1.0) if C <= 0 else None
    disc = B * B - 4 * A * C
    if disc < 0:
        return None
    r = math.sqrt(disc)
    # numerically stable roots
    qq = -0.5 * (B + math.copysign(r, B)) if B != 0 else -0.5 * r
    roots = sorted([qq / A, C / qq if qq != 0 else -qq / A])
    a, b = max(roots[0], 0.0), min(roots[1], 1.0)
    if a > b:
        return None
    return (a, b)


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def ball_intervals(path: PolyPath, z: np.ndarray, eps: float) -> list[tuple[float, float]]:
    """U_z as a merged list of closed intervals in normalized arclength."""
    L = path.length
    if L == 0:
        inside = np.linalg.norm(path.vertices[0] - z) <= eps
        return [(0.0, 1.0)] if inside else []
    ivs = []
    for i, seg in enumerate(path.segment_lengths):
        if seg == 0:
            continue
        hit = _segment_ball(path.vertices[i], path.vertices[i + 1], z, eps)
        if hit is not None:
            s0 = path.cumulative[i]
            ivs.append((float((s0 + hit[0] * seg) / L), float((s0 + hit[1] * seg) / L)))
    return _merge(ivs)


def _zpoints(Z) -> np.ndarray:
    if isinstance(Z, SeparatedPointSet):
        return Z.points
    return _as_points(Z) if len(Z) else np.zeros((0, 1))


def excursion_length(path: PolyPath, Z, eps: float) -> float:
    """Length of the part of the path at distance > eps from every point of Z."""
    if not eps > 0:
        raise PreconditionViolated("eps must be positive")
    zs = _zpoints(Z)
    L = path.length
    if zs.shape[0] == 0 or L == 0:
        return L if zs.shape[0] == 0 else (0.0 if ball_intervals(path, zs[0], eps) else L)
    ivs = []
    for z in zs:
        ivs.extend(ball_intervals(path, z, eps))
    covered = sum(b - a for a, b in _merge(ivs))
    return float(max(L * (1.0 - covered), 0.0))


class CoverStep(NamedTuple):
    index: int
    z: np.ndarray
    t_minus: float
    t_plus: float


def cover_decomposition(path: PolyPath, Z, eps: float) -> list[CoverStep]:
    """Greedy sequence z_1..z_m with t_i^- the first entry into the
    neighbourhood after t_{i-1}^+ and t_i^+ = sup U_{z_i}.

    Ties on t^- go to the ball with the largest sup, then the lowest index.
    """
    zs = _zpoints(Z)
    U = {j: ball_intervals(path, zs[j], eps) for j in range(zs.shape[0])}
    U = {j: iv for j, iv in U.items() if iv}
    steps: list[CoverStep] = []
    t_prev = 0.0
    first = True
    while U:
        best = None
        for j, ivs in U.items():
            sup = ivs[-1][1]
            # inf of (t_prev, 1] ∩ U_j; at the very start [0, 1] is allowed
            if first:
                cand = ivs[0][0]
            else:
                if sup <= t_prev:
                    continue
                cand = next(max(a, t_prev) for a, b in ivs if b > t_prev)
            key = (cand, -sup, j)
            if best is None or key < best[0]:
                best = (key, j, cand, sup)
        if best is None:
            break
        _, j, cand, sup = best
        steps.append(CoverStep(j, zs[j], float(cand), float(sup)))
        del U[j]
        t_prev = sup
        first = False
        if t_prev >= 1.0:
            break
    return steps


def gap_sum(path: PolyPath, steps: Sequence[CoverStep]) -> float:
    """sum_i d(alpha(t_{i-1}^+), alpha(t_i^-)) including the final gap to t = 1."""
    marks = [0.0]
    for s in steps:
        marks.extend([s.t_minus, s.t_plus])
    marks.append(1.0)
    total = 0.0
    for a, b in zip(marks[0::2], marks[1::2]):
        total += float(np.linalg.norm(path.point_at(b) - path.point_at(a)))
    return total


class PathFraction(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def verify_path_fraction(path: PolyPath, Z: SeparatedPointSet, eps: float, slack: float = 1e-12) -> PathFraction:
    N, delta = Z.N, Z.delta
    if not 0 < eps < delta / (2 * N):
        raise PreconditionViolated(f"eps must lie in (0, delta/(2N)) = (0, {delta / (2 * N):.6g})")
    lhs = excursion_length(path, Z, eps)
    ends = float(np.linalg.norm(path.end - path.start))
    rhs = (delta - 2 * N * eps) / delta * (ends - 2 * N * eps)
    tol = slack * max(1.0, path.length)
    return PathFraction(float(lhs), float(rhs), bool(lhs >= rhs - tol))


# -- instances --------------------------------------------------------------


class PathInstance(NamedTuple):
    path: PolyPath
    Z: SeparatedPointSet
    eps: float


def random_instance(rng: np.random.Generator, max_points: int = 7, max_vertices: int = 8) -> PathInstance:
    """Random polyline and point set in the unit square, with delta set to the
    largest separation constant of the set and eps drawn below delta/(2N)."""
    while True:
        k = int(rng.integers(1, max_points + 1))
        N = int(rng.integers(1, min(k, 3) + 1))
        pts = rng.random((k, 2))
        delta = max_separation_delta(pts, N)
        if math.isinf(delta):
            delta = float(rng.uniform(0.2, 1.5))
        if delta > 1e-6:
            break
    eps = float(rng.uniform(0.02, 0.98)) * delta / (2 * N)
    nv = int(rng.integers(2, max_vertices + 1))
    verts = rng.random((nv, 2))
    # route some paths through the points themselves
    if rng.random() < 0.5:
        idx = rng.integers(0, k, size=min(k, nv - 1))
        verts[1 : 1 + idx.size] = pts[idx] + rng.normal(scale=eps / 2, size=(idx.size, 2))
    return PathInstance(PolyPath.build(verts), SeparatedPointSet.build(pts, N, delta), eps)


def load_instances(path: str | Path) -> list[PathInstance]:
    """JSON list of {points, path, N, delta, eps}."""
    out = []
    for e in json.loads(Path(path).read_text(encoding="utf-8")):
        Z = SeparatedPointSet.build(e["points"], e["N"], e["delta"])
        out.append(PathInstance(PolyPath.build(e["path"]), Z, float(e["eps"])))
    return out
