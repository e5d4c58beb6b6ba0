"""Schwarzian derivatives of holomorphic maps on the unit disk.

Maps are stored as truncated Taylor series at 0 (exact to the truncation
order) and, for the named families, as closed-form callables that stay valid
all the way to the unit circle. The hyperbolic area form on the disk is
``4 / (1 - |z|^2)^2``, so the pointwise norm of a quadratic differential is
``|phi(z)| (1 - |z|^2)^2 / 4``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from . import series as ps
from .errors import CriticalPoint, InversionFailure, OutOfRange, PreconditionViolated
from .quadrature import QuadConfig, integrate_2d

DEFAULT_ORDER = 64
MARGULIS_2D = math.asinh(1.0)
KRAUS_NEHARI = 1.5
CRITICAL_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ClosedForm:
    f: Callable
    df: Callable
    schwarzian: Callable


@dataclass(frozen=True, eq=False)
class AnalyticMap:
    """Holomorphic map given by its truncated Taylor series at 0.

    ``r_max`` is the radius inside which the truncated series is trusted.
    ``closed_form``, when present, evaluates the map exactly on the whole disk.
    """

    coeffs: np.ndarray
    r_max: float = 0.5
    tag: str = "custom"
    params: dict = field(default_factory=dict)
    closed_form: ClosedForm | None = None

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @cached_property
    def _derivs(self):
        d1 = ps.derivative(self.coeffs)
        d2 = ps.derivative(d1)
        d3 = ps.derivative(d2)
        return d1, d2, d3

    def series_ok(self, z) -> bool:
        return bool(np.all(np.abs(z) <= self.r_max + 1e-15))

    def __call__(self, z):
        if self.series_ok(z):
            return ps.evaluate(self.coeffs, z)
        if self.closed_form is not None:
            return self.closed_form.f(np.asarray(z, dtype=complex))
        raise OutOfRange(f"|z| exceeds validity radius {self.r_max} of {self.tag}")

    def derivative(self, z):
        if self.series_ok(z):
            return ps.evaluate(self._derivs[0], z)
        if self.closed_form is not None:
            return self.closed_form.df(np.asarray(z, dtype=complex))
        raise OutOfRange(f"|z| exceeds validity radius {self.r_max} of {self.tag}")

    @property
    def normalized(self) -> bool:
        """True when f(0) = 0 and f'(0) != 0."""
        return abs(self.coeffs[0]) < 1e-14 and abs(self.coeffs[1]) > 0


# -- constructors -----------------------------------------------------------


def from_coeffs(coeffs, r_max: float = 0.5, order: int | None = None) -> AnalyticMap:
    return AnalyticMap(ps.as_series(coeffs, order), r_max=r_max, tag="custom")


def identity(order: int = DEFAULT_ORDER) -> AnalyticMap:
    return mobius(1, 0, 0, 1, order)


def mobius(a, b, c, d, order: int = DEFAULT_ORDER) -> AnalyticMap:
    """``(a z + b) / (c z + d)`` with the pole outside the closed disk."""
    a, b, c, d = (complex(v) for v in (a, b, c, d))
    if abs(a * d - b * c) == 0:
        raise PreconditionViolated("degenerate Mobius transformation")
    if abs(d) <= abs(c):
        raise PreconditionViolated("pole must lie outside the closed unit disk")
    num = ps.as_series([b, a], order)
    den = ps.as_series([d, c], order)
    coeffs = ps.multiply(num, ps.reciprocal(den))
    # truncation error ~ |c/d|^n
    ratio = abs(c / d)
    r_max = 1.0 if ratio == 0 else min(1.0, 0.5 / ratio)
    cf = ClosedForm(
        f=lambda z: (a * z + b) / (c * z + d),
        df=lambda z: (a * d - b * c) / (c * z + d) ** 2,
        schwarzian=lambda z: np.zeros_like(np.asarray(z, dtype=complex)),
    )
    return AnalyticMap(coeffs, r_max, "mobius", {"a": a, "b": b, "c": c, "d": d}, cf)


def koebe(order: int = DEFAULT_ORDER) -> AnalyticMap:
    """Koebe function z / (1 - z)^2, the extremal map of the class S."""
    n = np.arange(order + 1)
    cf = ClosedForm(
        f=lambda z: z / (1 - z) ** 2,
        df=lambda z: (1 + z) / (1 - z) ** 3,
        schwarzian=lambda z: -6.0 / (1 - z**2) ** 2,
    )
    return AnalyticMap(n.astype(complex), 0.5, "koebe", {}, cf)


def odd_koebe(order: int = DEFAULT_ORDER) -> AnalyticMap:
    """z / (1 - z^2): the disk onto the plane minus two imaginary slits."""
    coeffs = np.zeros(order + 1, dtype=complex)
    coeffs[1::2] = 1.0
    cf = ClosedForm(
        f=lambda z: z / (1 - z**2),
        df=lambda z: (1 + z**2) / (1 - z**2) ** 2,
        schwarzian=lambda z: 6.0 / (1 + z**2) ** 2,
    )
    return AnalyticMap(coeffs, 0.5, "odd_koebe", {}, cf)


def exp_map(shift: bool = True, order: int = DEFAULT_ORDER) -> AnalyticMap:
    """e^z, or e^z - 1 when ``shift`` so that the map fixes 0."""
    coeffs = np.array([1.0 / math.factorial(k) for k in range(order + 1)], dtype=complex)
    off = 1.0 if shift else 0.0
    coeffs[0] -= off
    cf = ClosedForm(
        f=lambda z: np.exp(z) - off,
        df=np.exp,
        schwarzian=lambda z: np.full_like(np.asarray(z, dtype=complex), -0.5),
    )
    return AnalyticMap(coeffs, 1.0, "exp", {"shift": shift}, cf)


def quadratic(c, order: int = DEFAULT_ORDER) -> AnalyticMap:
    """z + c z^2, univalent on the disk iff |c| <= 1/2."""
    c = complex(c)
    cf = ClosedForm(
        f=lambda z: z + c * z**2,
        df=lambda z: 1 + 2 * c * z,
        schwarzian=lambda z: -6 * c**2 / (1 + 2 * c * z) ** 2,
    )
    return AnalyticMap(ps.as_series([0, 1, c], order), 1.0, "quadratic", {"c": c}, cf)


def log_map(order: int = DEFAULT_ORDER) -> AnalyticMap:
    """-log(1 - z), a convex univalent map."""
    coeffs = np.zeros(order + 1, dtype=complex)
    coeffs[1:] = 1.0 / np.arange(1, order + 1)
    cf = ClosedForm(
        f=lambda z: -np.log(1 - z),
        df=lambda z: 1 / (1 - z),
        schwarzian=lambda z: 0.5 / (1 - z) ** 2,
    )
    return AnalyticMap(coeffs, 0.5, "log", {}, cf)


def strip_map(order: int = DEFAULT_ORDER) -> AnalyticMap:
    """(1/2) log((1 + z) / (1 - z)), the disk onto a horizontal strip."""
    coeffs = np.zeros(order + 1, dtype=complex)
    coeffs[1::2] = 1.0 / np.arange(1, order + 1, 2)
    cf = ClosedForm(
        f=lambda z: 0.5 * np.log((1 + z) / (1 - z)),
        df=lambda z: 1 / (1 - z**2),
        schwarzian=lambda z: 2.0 / (1 - z**2) ** 2,
    )
    return AnalyticMap(coeffs, 0.5, "strip", {}, cf)


def scaling(rho: float, order: int = DEFAULT_ORDER) -> AnalyticMap:
    """z -> rho z, the disk onto the concentric disk of radius rho."""
    return mobius(rho, 0, 0, 1, order)


def slit_parameter_radius(c: float) -> float:
    """Euclidean radius rho of the omitted slit [-1, -rho] for ``slit_map(c)``."""
    if not 0 < c <= 1:
        raise OutOfRange("slit parameter must lie in (0, 1]")
    return ((2 - c) - 2 * math.sqrt(1 - c)) / c


def slit_map(c: float, order: int = DEFAULT_ORDER) -> AnalyticMap:
    """k^{-1}(c k(z)) with k the Koebe function: the disk onto itself minus
    the radial slit (-1, -rho], rho = slit_parameter_radius(c)."""
    if not 0 < c < 1:
        raise OutOfRange("slit parameter must lie in (0, 1)")
    # k(z) = ((p^2 - 1)/4) with p = (1+z)/(1-z); solve for p(f), then f.
    one_minus = ps.as_series([1, -1], order)
    p = ps.multiply(ps.as_series([1, 1], order), ps.reciprocal(one_minus))
    q = ps.sqrt(c * ps.multiply(p, p) + ps.as_series([1 - c], order))
    qm1 = q - ps.as_series([1], order)
    qp1 = q + ps.as_series([1], order)
    coeffs = ps.multiply(qm1, ps.reciprocal(qp1))
    coeffs[0] = 0.0

    def f(z):
        pz = (1 + z) / (1 - z)
        qz = np.sqrt(c * pz**2 + 1 - c)
        return (qz - 1) / (qz + 1)

    def dk(z):
        return (1 + z) / (1 - z) ** 3

    def df(z):
        return c * dk(z) / dk(f(z))

    def schw(z):
        def sk(w):
            return -6.0 / (1 - w**2) ** 2

        return sk(z) - sk(f(z)) * df(z) ** 2

    return AnalyticMap(coeffs, 0.5, "slit", {"c": c}, ClosedForm(f, df, schw))


def rotate(fmap: AnalyticMap, theta: float) -> AnalyticMap:
    """Conjugate by a rotation: z -> e^{-i theta} f(e^{i theta} z)."""
    u = complex(math.cos(theta), math.sin(theta))
    n = np.arange(fmap.coeffs.size)
    coeffs = fmap.coeffs * u ** (n - 1)
    cf = None
    if fmap.closed_form is not None:
        base = fmap.closed_form
        cf = ClosedForm(
            f=lambda z: base.f(u * z) / u,
            df=lambda z: base.df(u * z),
            schwarzian=lambda z: base.schwarzian(u * z) * u**2,
        )
    params = dict(fmap.params, theta=theta)
    return AnalyticMap(coeffs, fmap.r_max, fmap.tag, params, cf)


def centered(fmap: AnalyticMap) -> AnalyticMap:
    """f - f(0); same Schwarzian, fixes the origin."""
    if fmap.coeffs[0] == 0:
        return fmap
    coeffs = fmap.coeffs.copy()
    c0 = coeffs[0]
    coeffs[0] = 0.0
    cf = None
    if fmap.closed_form is not None:
        base = fmap.closed_form
        cf = ClosedForm(lambda z: base.f(z) - c0, base.df, base.schwarzian)
    return AnalyticMap(coeffs, fmap.r_max, fmap.tag, dict(fmap.params), cf)


def compose_maps(f: AnalyticMap, g: AnalyticMap) -> AnalyticMap:
    """Series of f o g (requires g(0) = 0); valid on the smaller radius."""
    return AnalyticMap(ps.compose(f.coeffs, g.coeffs), min(f.r_max, g.r_max), "custom")


# -- Schwarzian -------------------------------------------------------------


def _schwarzian_series(fmap: AnalyticMap, z):
    d1, d2, d3 = fmap._derivs
    a1 = ps.evaluate(d1, z)
    if np.any(np.abs(a1) < CRITICAL_THRESHOLD):
        raise CriticalPoint("f' vanishes at the requested point")
    a2 = ps.evaluate(d2, z)
    a3 = ps.evaluate(d3, z)
    r = a2 / a1
    return a3 / a1 - 1.5 * r * r


def schwarzian(fmap: AnalyticMap, z, method: str = "auto"):
    """Sf = (f''/f')' - (1/2)(f''/f')^2 at ``z`` (scalar or array).

    ``method`` is ``"series"``, ``"closed"`` or ``"auto"`` (series inside
    ``r_max``, closed form outside it).
    """
    z = np.asarray(z, dtype=complex)
    use_series = method == "series" or (method == "auto" and fmap.series_ok(z))
    if use_series:
        if not fmap.series_ok(z):
            raise OutOfRange(f"|z| exceeds validity radius {fmap.r_max}")
        out = _schwarzian_series(fmap, z)
    else:
        if fmap.closed_form is None:
            raise OutOfRange(f"no closed form for {fmap.tag} and |z| > {fmap.r_max}")
        if np.any(np.abs(fmap.closed_form.df(z)) < CRITICAL_THRESHOLD):
            raise CriticalPoint("f' vanishes at the requested point")
        out = fmap.closed_form.schwarzian(z)
    out = np.asarray(out, dtype=complex)
    return out[()] if out.ndim == 0 else out


def compose_rule_residual(f: AnalyticMap, g: AnalyticMap, z) -> float:
    """|S(f o g)(z) - Sf(g(z)) g'(z)^2 - Sg(z)| with f o g composed as series."""
    fg = compose_maps(f, g)
    lhs = schwarzian(fg, z, method="series")
    gz = g(z)
    rhs = schwarzian(f, gz) * g.derivative(z) ** 2 + schwarzian(g, z)
    return float(np.max(np.abs(lhs - rhs)))


# -- quadratic differentials on the disk --------------------------------------


@dataclass(frozen=True)
class QuadDiffDisk:
    """Holomorphic quadratic differential phi(z) dz^2 on the unit disk."""

    fn: Callable

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=complex))

    @classmethod
    def constant(cls, value: complex) -> "QuadDiffDisk":
        return cls(lambda z: np.full_like(z, value, dtype=complex))

    @classmethod
    def from_series(cls, coeffs) -> "QuadDiffDisk":
        a = ps.as_series(coeffs)
        return cls(lambda z: ps.evaluate(a, z))

    @classmethod
    def schwarzian_of(cls, fmap: AnalyticMap) -> "QuadDiffDisk":
        return cls(lambda z: schwarzian(fmap, z))


def hyperbolic_density(z):
    """Area-form density 4 / (1 - |z|^2)^2 of the hyperbolic metric on the disk."""
    return 4.0 / (1.0 - np.abs(z) ** 2) ** 2


def pointwise_norm(phi: QuadDiffDisk, z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise OutOfRange("pointwise norm needs |z| < 1")
    out = np.abs(phi(z)) / hyperbolic_density(z)
    return float(out) if np.ndim(out) == 0 else out


class LpNorm(NamedTuple):
    value: float
    change: float
    converged: bool


def lp_norm(phi: QuadDiffDisk, p, radius: float = 0.99, quad: QuadConfig | None = None) -> LpNorm:
    """L^p norm (p in {1, 2, inf}) of the pointwise norm on the disk |z| <= radius,
    against the hyperbolic area form."""
    if not 0 < radius < 1:
        raise OutOfRange("cutoff radius must lie in (0, 1)")
    if p in (math.inf, "inf"):
        return _sup_norm(phi, radius)
    if p not in (1, 2):
        raise PreconditionViolated("p must be 1, 2 or inf")

    def integrand(r, t):
        z = r * np.exp(1j * t)
        dens = hyperbolic_density(z)
        return (np.abs(phi(z)) / dens) ** p * dens * r

    res = integrate_2d(integrand, (0.0, radius), (0.0, 2 * math.pi), quad)
    return LpNorm(float(res.value.real) ** (1.0 / p), res.change, res.converged)


def _sup_norm(phi: QuadDiffDisk, radius: float, tol: float = 1e-6, max_level: int = 5) -> LpNorm:
    nr, nt = 64, 128
    prev = None
    change = math.inf
    for _ in range(max_level):
        r = np.linspace(0.0, radius, nr + 1)
        t = np.linspace(0.0, 2 * math.pi, nt, endpoint=False)
        z = (r[:, None] * np.exp(1j * t)[None, :]).ravel()
        val = float(np.max(pointwise_norm(phi, z)))
        if prev is not None:
            change = abs(val - prev)
            if change <= tol * max(1.0, val):
                return LpNorm(val, change, True)
        prev = val
        nr, nt = 2 * nr, 2 * nt
    return LpNorm(prev, change, False)


# -- area theorem / Nehari expansion -----------------------------------------


def nehari_coefficients(fmap: AnalyticMap, n_max: int) -> np.ndarray:
    """Coefficients b_0..b_{n_max} of g(z) = f'(0)/f(1/z) = z + sum b_n z^{-n}."""
    a = fmap.coeffs
    if abs(a[0]) > 1e-14:
        raise PreconditionViolated("map must fix 0")
    if abs(a[1]) == 0:
        raise InversionFailure("f'(0) vanishes")
    if n_max + 2 > a.size:
        raise PreconditionViolated(f"n_max exceeds series order {fmap.order}")
    # f(w)/(f'(0) w) = 1 + c_1 w + ...; g = z * (its reciprocal at w = 1/z)
    h = ps.reciprocal(a[1:] / a[1])
    return h[1 : n_max + 2]


def area_sum(b: np.ndarray) -> float:
    """sum_{n>=1} n |b_n|^2 (at most 1 for univalent maps)."""
    n = np.arange(b.size)
    return float(np.sum(n[1:] * np.abs(b[1:]) ** 2))


def enclosed_area(b: np.ndarray, rho: float) -> float:
    """Euclidean area bounded by g(|z| = rho) for rho > 1."""
    n = np.arange(b.size)
    return float(math.pi * rho**2 - math.pi * np.sum(n[1:] * np.abs(b[1:]) ** 2 * rho ** (-2.0 * n[1:])))


# -- bounds ------------------------------------------------------------------


def bigdisk_bound(r: float) -> float:
    """(3/2) sech(r/2): pointwise Schwarzian bound when the image contains a
    hyperbolic disk of radius ``r`` about the image point."""
    if r < 0:
        raise OutOfRange("radius must be nonnegative")
    if math.isinf(r):
        return 0.0
    return KRAUS_NEHARI / math.cosh(r / 2)


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def check_bigdisk(fmap: AnalyticMap, r: float, slack: float = 1e-12) -> InequalityCheck:
    lhs = pointwise_norm(QuadDiffDisk.schwarzian_of(fmap), 0.0)
    rhs = bigdisk_bound(r)
    return InequalityCheck(lhs, rhs, lhs <= rhs + slack)


def ahlfors_weill_distance(t: float) -> float:
    """(1/2) log((1 + 2t)/(1 - 2t)) for 0 <= t < 1/2."""
    if not 0 <= t < 0.5:
        raise OutOfRange("sup norm must lie in [0, 1/2)")
    return 0.5 * math.log((1 + 2 * t) / (1 - 2 * t))


def ahlfors_weill_linear(t: float) -> float:
    """The simplified bound 3t, valid for t <= 1/3."""
    if not 0 <= t <= 1 / 3:
        raise OutOfRange("linear estimate needs 0 <= t <= 1/3")
    return 3.0 * t


class SkinningBound(NamedTuple):
    teich: float
    wp: float


def skinning_distance_bound(t: float, lam: float, area: float) -> SkinningBound:
    if not 0 <= t <= 1 / 3:
        raise OutOfRange("needs 0 <= t <= 1/3")
    if not 0 <= lam < 1:
        raise OutOfRange("contraction constant must lie in [0, 1)")
    if area <= 0:
        raise OutOfRange("area must be positive")
    teich = 3.0 * t / (1.0 - lam)
    return SkinningBound(teich, math.sqrt(area) * teich)


def pointwise_from_l2(l2: float, inj: float) -> float:
    """l2 / sqrt(min(inj, arcsinh 1))."""
    if l2 < 0 or inj <= 0:
        raise OutOfRange("needs l2 >= 0 and inj > 0")
    return l2 / math.sqrt(min(inj, MARGULIS_2D))


# -- map zoo ---------------------------------------------------------------

_FORMS = {
    "identity": lambda p: identity(),
    "mobius": lambda p: mobius(*_complex_list(p["abcd"])),
    "koebe": lambda p: koebe(),
    "odd_koebe": lambda p: odd_koebe(),
    "exp": lambda p: exp_map(p.get("shift", True)),
    "quadratic": lambda p: quadratic(_complex(p["c"])),
    "log": lambda p: log_map(),
    "strip": lambda p: strip_map(),
    "scaling": lambda p: scaling(p["rho"]),
    "slit": lambda p: slit_map(p["c"]),
}


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _complex_list(vs) -> list[complex]:
    return [_complex(v) for v in vs]


@dataclass(frozen=True, eq=False)
class ZooEntry:
    name: str
    fmap: AnalyticMap
    certified_radius: float | None
    into_disk: bool


def certified_radius(form: str, params: dict) -> float | None:
    """Hyperbolic radius of the largest disk about 0 inside f(disk), for maps
    of the disk into itself; None when the family does not map into the disk."""
    if form == "identity":
        return math.inf
    if form == "scaling":
        rho = params["rho"]
        return math.log((1 + rho) / (1 - rho))
    if form == "slit":
        rho = slit_parameter_radius(params["c"])
        return math.log((1 + rho) / (1 - rho))
    return None


def load_zoo(path: str | Path | None = None) -> list[ZooEntry]:
    """Load the map zoo manifest (JSON list of {name, form, params, theta,
    certified_radius}). ``certified_radius`` may be a number, ``"inf"``,
    ``"auto"`` (derived analytically from the family) or null."""
    if path is None:
        path = Path(__file__).parent / "data" / "map_zoo.json"
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for e in entries:
        form = e["form"]
        params = e.get("params", {})
        fmap = _FORMS[form](params)
        if e.get("theta"):
            fmap = rotate(fmap, float(e["theta"]))
        rad = e.get("certified_radius")
        if rad == "auto":
            rad = certified_radius(form, params)
        elif rad == "inf":
            rad = math.inf
        elif rad is not None:
            rad = float(rad)
        out.append(ZooEntry(e["name"], fmap, rad, rad is not None))
    return out
