"""Composite tensor-product Gauss-Legendre quadrature with panel doubling."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureDivergence


@dataclass(frozen=True)
class QuadConfig:
    order: int = 16
    panels: int = 1
    max_panels: int = 128
    rtol: float = 1e-10
    # absolute floor, relative to the integral of |integrand|
    scale_tol: float = 1e-14


@dataclass(frozen=True)
class QuadResult:
    value: complex
    change: float
    panels: int
    converged: bool


@lru_cache(maxsize=None)
def _nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _composite_nodes(a: float, b: float, order: int, panels: int):
    x, w = _nodes(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def _tensor(fn, xa, xb, ya, yb, order, panels):
    xs, wx = _composite_nodes(xa, xb, order, panels)
    ys, wy = _composite_nodes(ya, yb, order, panels)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = np.asarray(fn(X, Y))
    W = wx[:, None] * wy[None, :]
    return np.sum(W * vals), np.sum(W * np.abs(vals))


def integrate_2d(fn, x_range, y_range, config: QuadConfig | None = None) -> QuadResult:
    """Integrate ``fn(X, Y)`` over a rectangle, doubling panels until stable.

    ``fn`` must accept broadcast arrays. Raises QuadratureDivergence if the
    relative change never drops below ``config.rtol``.
    """
    cfg = config or QuadConfig()
    xa, xb = x_range
    ya, yb = y_range
    panels = cfg.panels
    prev, _ = _tensor(fn, xa, xb, ya, yb, cfg.order, panels)
    change = np.inf
    while panels < cfg.max_panels:
        panels *= 2
        val, mag = _tensor(fn, xa, xb, ya, yb, cfg.order, panels)
        change = float(abs(val - prev))
        if change <= cfg.rtol * abs(val) + cfg.scale_tol * mag:
            return QuadResult(complex(val), change, panels, True)
        prev = val
    raise QuadratureDivergence(
        f"no convergence after {panels} panels per axis (last change {change:.3e})"
    )


def integrate_1d(fn, a: float, b: float, config: QuadConfig | None = None) -> QuadResult:
    cfg = config or QuadConfig()

    def once(panels):
        x, w = _composite_nodes(a, b, cfg.order, panels)
        v = np.asarray(fn(x))
        return np.sum(w * v), np.sum(w * np.abs(v))

    panels = cfg.panels
    prev, _ = once(panels)
    change = np.inf
    while panels < cfg.max_panels:
        panels *= 2
        val, mag = once(panels)
        change = float(abs(val - prev))
        if change <= cfg.rtol * abs(val) + cfg.scale_tol * mag:
            return QuadResult(complex(val), change, panels, True)
        prev = val
    raise QuadratureDivergence(f"no convergence after {panels} panels (last change {change:.3e})")
