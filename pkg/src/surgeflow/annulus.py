"""Annuli in strip coordinates, Beltrami differentials on them, and the cusp
deformation estimates for Weil-Petersson distance.

The annulus of modulus ``m`` is the strip ``0 < Im z < pi`` modulo the
translation ``z -> z + pi/m``. Its hyperbolic area form is
``dx dy / sin(y)^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.integrate import quad as scipy_quad

from .errors import OutOfRange, PreconditionViolated, QuadratureDivergence
from .quadrature import QuadConfig, integrate_1d, integrate_2d

EPS2 = math.asinh(1.0)
TEICHMUELLER = "teichmueller"
HARMONIC = "harmonic"


@dataclass(frozen=True)
class StripAnnulus:
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise OutOfRange("modulus must be positive")

    @property
    def period(self) -> float:
        return math.pi / self.m

    @property
    def x_range(self) -> tuple[float, float]:
        return (0.0, self.period)

    @property
    def y_range(self) -> tuple[float, float]:
        return (0.0, math.pi)

    @property
    def modulus(self) -> float:
        # height / period
        return math.pi / self.period


@dataclass(frozen=True)
class BeltramiDatum:
    annulus: StripAnnulus
    c: complex
    kind: str = TEICHMUELLER

    def __post_init__(self):
        if self.kind not in (TEICHMUELLER, HARMONIC):
            raise PreconditionViolated(f"unknown Beltrami kind {self.kind!r}")

    def lift(self, x, y):
        y = np.asarray(y, dtype=float)
        if self.kind == TEICHMUELLER:
            shape = np.ones_like(y)
        else:
            shape = np.sin(y) ** 2
        return complex(self.c) * np.broadcast_to(shape, np.broadcast(np.asarray(x), y).shape)


@dataclass(frozen=True)
class PeriodicQuadDiff:
    """g(z) = sum_k a_k exp(2 i m k (z - i pi/2)), invariant under z -> z + pi/m.

    Modes are centred on the midline of the strip so that positive and
    negative frequencies have comparable size.
    """

    m: float
    coeffs: tuple[tuple[int, complex], ...]

    @classmethod
    def from_mapping(cls, m: float, coeffs: Mapping[int, complex]) -> "PeriodicQuadDiff":
        return cls(m, tuple(sorted((int(k), complex(a)) for k, a in coeffs.items())))

    @classmethod
    def constant(cls, m: float, value: complex = 1.0) -> "PeriodicQuadDiff":
        return cls(m, ((0, complex(value)),))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        w = z - 0.5j * math.pi
        out = np.zeros_like(z)
        for k, a in self.coeffs:
            out = out + a * np.exp(2j * self.m * k * w)
        return out

    @property
    def constant_term(self) -> complex:
        return sum((a for k, a in self.coeffs if k == 0), 0j)

    def horizontal_integral(self, y: float, quad: QuadConfig | None = None) -> complex:
        """b(y) = int_0^{pi/m} g(x + i y) dx."""
        res = integrate_1d(lambda x: self(x + 1j * y), 0.0, math.pi / self.m, quad)
        return res.value


def pairing(mu: BeltramiDatum, phi: PeriodicQuadDiff, quad: QuadConfig | None = None) -> complex:
    """Integral of lift(mu) * g over the fundamental domain."""
    if not math.isclose(mu.annulus.m, phi.m, rel_tol=1e-15):
        raise PreconditionViolated("Beltrami datum and differential live on different annuli")
    if mu.c == 0:
        return 0j
    A = mu.annulus

    def integrand(x, y):
        return mu.lift(x, y) * phi(x + 1j * y)

    return integrate_2d(integrand, A.x_range, A.y_range, quad).value


def triviality_residual(c: complex, annulus: StripAnnulus, phi: PeriodicQuadDiff, quad: QuadConfig | None = None) -> float:
    """|<c mu_teich, phi> - <2c mu_harm, phi>|."""
    mu = BeltramiDatum(annulus, c, TEICHMUELLER)
    nu = BeltramiDatum(annulus, 2 * c, HARMONIC)
    return float(abs(pairing(mu, phi, quad) - pairing(nu, phi, quad)))


class HarmonicBound(NamedTuple):
    bound: float
    direct: float


def harmonic_norm_bound(data: Iterable[tuple[complex, float]], quad: QuadConfig | None = None) -> HarmonicBound:
    """Closed form 2 pi^2 sum |c|^2/m next to the quadrature of
    4 sum |c|^2 int |mu_harm|^2 dx dy / sin^2 y."""
    data = [(complex(c), float(m)) for c, m in data]
    for _, m in data:
        if not m > 0:
            raise OutOfRange("moduli must be positive")
    bound = 2 * math.pi**2 * sum(abs(c) ** 2 / m for c, m in data)

    def density(x, y):
        s2 = np.sin(y) ** 2
        # sin^4 / sin^2, extended by its limit 0 on the boundary
        val = np.divide(s2 * s2, s2, out=np.zeros_like(s2), where=s2 > 0)
        return np.broadcast_to(val, np.broadcast(x, y).shape)

    direct = 0.0
    for c, m in data:
        if c == 0:
            continue
        A = StripAnnulus(m)
        direct += 4 * abs(c) ** 2 * integrate_2d(density, A.x_range, A.y_range, quad).value.real
    return HarmonicBound(bound, float(direct))


# -- cusps ------------------------------------------------------------------

CUSP_PERIOD = 2.0
CUSP_FLOOR = 1.0


def cusp_band(m: float) -> tuple[float, float]:
    """Height range of the band whose quotient is an annulus of modulus m."""
    return (CUSP_FLOOR, CUSP_FLOOR + CUSP_PERIOD * m)


def band_modulus(lo: float, hi: float, period: float = CUSP_PERIOD) -> float:
    return (hi - lo) / period


@dataclass(frozen=True)
class CuspDeformation:
    """Affine stretch of the cusp by the factor ``scale`` = e^t on the band of
    modulus m, translation above it. Storing the factor keeps compositions
    with exactly representable factors exact."""

    m: float
    scale: float

    @property
    def t(self) -> float:
        return math.log(self.scale)

    @property
    def image_modulus(self) -> float:
        return self.scale * self.m

    @property
    def band(self) -> tuple[float, float]:
        return cusp_band(self.image_modulus)

    @property
    def beltrami(self) -> float:
        """Beltrami coefficient (1 - e^t)/(1 + e^t) = -tanh(t/2) on the band."""
        return (1 - self.scale) / (1 + self.scale)

    @property
    def infinitesimal(self) -> float:
        """Derivative of the coefficient at t = 0."""
        return -0.5

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        if np.any(y < CUSP_FLOOR):
            raise OutOfRange("points must lie in Im z >= 1")
        top = cusp_band(self.m)[1]
        s = self.scale
        y_new = np.where(y <= top, CUSP_FLOOR + s * (y - CUSP_FLOOR), y + (top - CUSP_FLOOR) * (s - 1))
        return x + 1j * y_new

    def then(self, other_scale: float) -> "CuspDeformation":
        """The deformation with factor ``other_scale`` applied to the image of this one."""
        return CuspDeformation(self.image_modulus, other_scale)


def cusp_deformation(m: float, t: float) -> CuspDeformation:
    return cusp_stretch(m, math.exp(t))


def cusp_stretch(m: float, scale: float) -> CuspDeformation:
    if not m > 0:
        raise OutOfRange("modulus must be positive")
    if not scale > 0:
        raise OutOfRange("stretch factor must be positive")
    return CuspDeformation(float(m), float(scale))


def semigroup_residual(m: float, a: float, b: float, z) -> float:
    """max |f_b(f_a(z)) - f_{ab}(z)| for stretch factors a and b."""
    first = cusp_stretch(m, a)
    lhs = first.then(b)(first(z))
    rhs = cusp_stretch(m, a * b)(z)
    return float(np.max(np.abs(lhs - rhs)))


def cusp_modulus_from_length(ell: float) -> float:
    if not 0 < ell < 2 * EPS2:
        raise OutOfRange("length must lie in (0, 2 arcsinh 1)")
    return 0.5 * (1 / math.sinh(ell / 2) - 1)


def wp_path_bound(moduli: Sequence[float]) -> float:
    moduli = np.asarray(moduli, dtype=float)
    if np.any(moduli <= 0):
        raise OutOfRange("moduli must be positive")
    return float(2 * math.pi * math.sqrt(np.sum(1 / moduli)))


def wp_path_quadrature(moduli: Sequence[float]) -> float:
    """int_0^inf pi sqrt(sum 1/(m_i e^t)) dt by adaptive quadrature."""
    inv = float(np.sum(1 / np.asarray(moduli, dtype=float)))
    val, err = scipy_quad(lambda t: math.pi * math.sqrt(inv * math.exp(-t)), 0, math.inf, epsabs=1e-13, epsrel=1e-13)
    if err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureDivergence(f"path integral error estimate {err:.3e}")
    return float(val)


def wp_prefactor(ell0: float) -> float:
    s = math.sinh(ell0 / 2)
    if not 0 < ell0 < 2 * EPS2:
        raise OutOfRange("ell0 must lie in (0, 2 arcsinh 1)")
    return 2 * math.pi * math.sqrt(2 * s / (ell0 * (1 - s)))


def wp_estimate(ell0: float, lengths: Sequence[float]) -> float:
    arr = np.asarray(lengths, dtype=float)
    if np.any(arr <= 0) or np.any(arr > ell0):
        raise OutOfRange("lengths must lie in (0, ell0]")
    return wp_prefactor(ell0) * math.sqrt(float(np.sum(arr)))


def modulus_lower_bound(ell0: float, ell: float) -> float:
    s = math.sinh(ell0 / 2)
    return ell0 * (1 - s) / (2 * s * ell)


def annulus_modulus_from_core(ell: float) -> float:
    if not ell > 0:
        raise OutOfRange("core length must be positive")
    return math.pi / ell


# -- test differential suites ----------------------------------------------


def random_test_differential(rng: np.random.Generator, m: float, kmax: int = 2) -> PeriodicQuadDiff:
    ks = range(-kmax, kmax + 1)
    coeffs = {k: complex(*rng.normal(size=2)) for k in ks}
    return PeriodicQuadDiff.from_mapping(m, coeffs)


def load_test_suite(path: str | Path) -> list[dict]:
    """JSON list of {m, c, coeffs: {k: [re, im]}} entries."""
    out = []
    for e in json.loads(Path(path).read_text(encoding="utf-8")):
        m = float(e["m"])
        coeffs = {int(k): complex(*v) if isinstance(v, list) else complex(v) for k, v in e["coeffs"].items()}
        c = e.get("c", 1.0)
        out.append({"m": m, "c": complex(*c) if isinstance(c, list) else complex(c), "phi": PeriodicQuadDiff.from_mapping(m, coeffs)})
    return out
