"""Surface topology, collar formulas, the near-node constants and W-volume arithmetic."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import simpson

from .errors import (
    GridTooCoarse,
    InvalidTopology,
    OutOfCollar,
    OutOfRange,
    PreconditionViolated,
)

EPS2 = math.asinh(1.0)
ASINH_HALF = math.asinh(0.5)

PAPER_UNIVERSAL = "paper-universal"
EXTERNAL = "external-nonconstructive"
DERIVED = "derived"


# -- topology ---------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceTopology:
    """Finite union of connected surfaces, each given as (genus, punctures)."""

    components: tuple[tuple[int, int], ...]

    def __post_init__(self):
        comps = tuple((int(g), int(k)) for g, k in self.components)
        if not comps:
            raise InvalidTopology("surface needs at least one component")
        for g, k in comps:
            if g < 0 or k < 0:
                raise InvalidTopology(f"negative genus or puncture count in {(g, k)}")
            if 2 * g - 2 + k <= 0:
                raise InvalidTopology(f"component {(g, k)} is not hyperbolic")
        object.__setattr__(self, "components", comps)

    @classmethod
    def closed(cls, genus: int) -> "SurfaceTopology":
        return cls(((genus, 0),))

    @classmethod
    def from_lists(cls, genera: Sequence[int], punctures: Sequence[int] | None = None):
        if punctures is None:
            punctures = [0] * len(genera)
        if len(punctures) != len(genera):
            raise InvalidTopology("genus and puncture lists differ in length")
        return cls(tuple(zip(genera, punctures)))

    @property
    def n(self) -> int:
        """Complex dimension of Teichmuller space: sum of 3g - 3 + k."""
        return sum(3 * g - 3 + k for g, k in self.components)

    @property
    def abs_euler(self) -> int:
        return sum(2 * g - 2 + k for g, k in self.components)

    @property
    def area(self) -> float:
        return 2 * math.pi * self.abs_euler

    @property
    def is_closed(self) -> bool:
        return all(k == 0 for _, k in self.components)

    def require_nontrivial(self) -> None:
        if self.n < 1:
            raise InvalidTopology("Teichmuller space is a point (n(S) = 0)")


# -- collar lemma -----------------------------------------------------------


def collar_width(ell: float) -> float:
    if ell <= 0:
        raise OutOfRange("length must be positive")
    return math.asinh(1.0 / math.sinh(ell / 2))


def collar_injectivity(ell: float, d: float) -> float:
    """Injectivity radius at distance ``d`` from a geodesic of length ``ell``."""
    w = collar_width(ell)
    if d < 0 or d > w * (1 + 1e-14):
        raise OutOfCollar(f"distance {d} outside collar of width {w}")
    return math.asinh(math.sinh(ell / 2) * math.cosh(d))


# -- constants ledger ---------------------------------------------------------


class LedgerEntry(NamedTuple):
    name: str
    value: float
    provenance: str
    note: str


@dataclass(frozen=True)
class ConstantsLedger:
    """Named constants for a given topology. Inputs are stored, everything
    else is recomputed from them on access."""

    topology: SurfaceTopology
    delta0: float = 6.0
    c_drill: float = 1.0
    l_drill: float = EPS2
    lam: float = 0.5

    def __post_init__(self):
        self.topology.require_nontrivial()
        if not self.delta0 > 0:
            raise PreconditionViolated("delta0 must be positive")
        if not self.c_drill > 0:
            raise PreconditionViolated("c_drill must be positive")
        if not 0 < self.l_drill < 2 * EPS2:
            raise PreconditionViolated("l_drill must lie in (0, 2 arcsinh 1)")
        if not 0 <= self.lam < 1:
            raise PreconditionViolated("lambda must lie in [0, 1)")

    def with_overrides(self, **kw) -> "ConstantsLedger":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def exponent(self) -> int:
        return 2 * self.n + 3

    @property
    def eps2(self) -> float:
        return EPS2

    @property
    def C0(self) -> float:
        return math.sqrt(2) * (self.c_drill + 1)

    @property
    def C1(self) -> float:
        return 9 * math.sqrt(2) * (self.C0 + 1)

    @property
    def K0(self) -> float:
        return 1.0 / (4 * math.sqrt(3 * math.pi) * self.C1)

    @property
    def eps0(self) -> float:
        return min(math.sqrt(self.l_drill) / self.K0, 4 * math.sqrt(math.pi / 3))

    def log_A(self, eps: float) -> float:
        """log A(eps, S); A itself underflows quickly as n(S) grows."""
        if eps <= 0:
            return -math.inf
        return self.exponent * math.log(self.K0 * eps * (1 - self.lam) / self.n)

    def A(self, eps: float) -> float:
        if eps <= 0:
            return 0.0
        return math.exp(self.log_A(eps))

    @property
    def eps_star(self) -> float:
        return min(self.eps0, self.delta0 / 2 ** (self.n + 2))

    @property
    def A_S(self) -> float:
        return 0.5 * self.A(self.eps_star)

    @property
    def log_A_S(self) -> float:
        return math.log(0.5) + self.log_A(self.eps_star)

    @property
    def delta(self) -> float:
        return self.delta0 / 2

    def entries(self) -> list[LedgerEntry]:
        return [
            LedgerEntry("n", self.n, DERIVED, "sum of 3g-3+k"),
            LedgerEntry("exponent", self.exponent, DERIVED, "2n+3"),
            LedgerEntry("abs_chi", self.topology.abs_euler, DERIVED, "sum of 2g-2+k"),
            LedgerEntry("eps2", self.eps2, PAPER_UNIVERSAL, "arcsinh(1)"),
            LedgerEntry("delta0", self.delta0, EXTERNAL, "strata separation, placeholder"),
            LedgerEntry("c_drill", self.c_drill, EXTERNAL, "drilling constant, placeholder"),
            LedgerEntry("l_drill", self.l_drill, EXTERNAL, "drilling length, placeholder"),
            LedgerEntry("lambda", self.lam, EXTERNAL, "skinning contraction, placeholder"),
            LedgerEntry("C0", self.C0, DERIVED, "sqrt2 (c_drill + 1)"),
            LedgerEntry("C1", self.C1, DERIVED, "9 sqrt2 (C0 + 1)"),
            LedgerEntry("K0", self.K0, DERIVED, "1 / (4 sqrt(3 pi) C1)"),
            LedgerEntry("eps0", self.eps0, DERIVED, "min(sqrt(l_drill)/K0, 4 sqrt(pi/3))"),
            LedgerEntry("eps_star", self.eps_star, DERIVED, "min(eps0, delta0 / 2^(n+2))"),
            LedgerEntry("A(eps_star)", self.A(self.eps_star), DERIVED, "(K0 eps (1-lambda)/n)^(2n+3)"),
            LedgerEntry("log_A_S", self.log_A_S, DERIVED, "log of A(S)"),
            LedgerEntry("A_S", self.A_S, DERIVED, "A(eps_star) / 2"),
            LedgerEntry("delta", self.delta, DERIVED, "delta0 / 2"),
        ]

    def to_dict(self) -> dict:
        return {
            "schema": "surgeflow.ledger/1",
            "topology": [list(c) for c in self.topology.components],
            "entries": [
                {"name": e.name, "value": e.value, "provenance": e.provenance, "note": e.note}
                for e in self.entries()
            ],
        }


# -- drilling and progress ----------------------------------------------------


def _lambda(l2norm: float, n: int) -> float:
    if l2norm < 0:
        raise OutOfRange("L2 norm must be nonnegative")
    return l2norm ** (2.0 / (2 * n + 3))


class DrillSelection(NamedTuple):
    k: int
    ell_cut: float
    tau: tuple[int, ...]
    Lambda: float


def select_drilling_simplex(
    lengths: Sequence[float], l2norm: float, topology: SurfaceTopology, ledger: ConstantsLedger | None = None
) -> DrillSelection:
    """Smallest k in [0, n] whose window (L^{2k+3}, L^{2k+1}] holds no length,
    with L = l2norm^{2/(2n+3)}; curves of length <= L^{2k+3} form the simplex."""
    n = topology.n
    l_drill = ledger.l_drill if ledger is not None else EPS2
    lam = _lambda(l2norm, n)
    if lam > l_drill:
        raise PreconditionViolated(f"Lambda = {lam:.6g} exceeds l_drill = {l_drill:.6g}")
    arr = np.asarray(lengths, dtype=float)
    if np.any(arr < 0):
        raise PreconditionViolated("lengths must be nonnegative")
    if np.count_nonzero(arr <= lam) > n:
        raise PreconditionViolated("more than n(S) curves shorter than Lambda")
    for k in range(n + 1):
        lo, hi = lam ** (2 * k + 3), lam ** (2 * k + 1)
        if not np.any((arr > lo) & (arr <= hi)):
            tau = tuple(int(i) for i in np.flatnonzero(arr <= lo))
            return DrillSelection(k, lo, tau, lam)
    # unreachable: n+1 disjoint windows, at most n short curves
    raise AssertionError("pigeonhole failed")


def drill_pointwise_bound(l2norm: float, topology: SurfaceTopology, ledger: ConstantsLedger) -> float:
    lam = _lambda(l2norm, topology.n)
    if lam > ledger.l_drill:
        raise PreconditionViolated("Lambda exceeds l_drill")
    return ledger.C0 * math.sqrt(topology.n) * lam


class ProgressBounds(NamedTuple):
    wp_move: float
    linf_hat: float


def progress_bounds(l2norm: float, topology: SurfaceTopology, ledger: ConstantsLedger) -> ProgressBounds:
    n = topology.n
    lam = _lambda(l2norm, n)
    if lam > min(ledger.l_drill, 2 * ASINH_HALF):
        raise PreconditionViolated("Lambda exceeds min(l_drill, 2 arcsinh(1/2))")
    root = l2norm ** (1.0 / (2 * n + 3))
    wp = 2 * math.pi / math.sqrt(ASINH_HALF) * math.sqrt(n) * root
    return ProgressBounds(wp, ledger.C1 * math.sqrt(n) * root)


class NearnodeCheck(NamedTuple):
    A: float
    Lambda: float
    linf_hat: float
    C1K0eps: float
    lambda_ok: bool
    linf_ok: bool


def nearnode_threshold(eps: float, topology: SurfaceTopology, ledger: ConstantsLedger) -> float:
    return nearnode_check(eps, topology, ledger).A


def nearnode_check(eps: float, topology: SurfaceTopology, ledger: ConstantsLedger) -> NearnodeCheck:
    """A(eps, S) together with the consistency chain evaluated at ||phi||_2 = A."""
    if ledger.topology != topology:
        ledger = replace(ledger, topology=topology)
    if not 0 < eps <= ledger.eps0 * (1 + 1e-15):
        raise OutOfRange(f"eps must lie in (0, eps0 = {ledger.eps0:.6g}]")
    n = topology.n
    log_a = ledger.log_A(eps)
    # Lambda = A^{2/(2n+3)} and the sqrt of it, both from log space
    lam = math.exp(2 * log_a / (2 * n + 3))
    linf = ledger.C1 * math.sqrt(n) * math.exp(log_a / (2 * n + 3))
    c1k0 = ledger.C1 * ledger.K0 * eps
    slack = 1e-12
    return NearnodeCheck(
        A=math.exp(log_a),
        Lambda=lam,
        linf_hat=linf,
        C1K0eps=c1k0,
        lambda_ok=lam < ledger.l_drill,
        linf_ok=linf <= c1k0 * (1 + slack) and c1k0 <= 1 / 3 + slack,
    )


class MainBounds(NamedTuple):
    lower: float
    upper: float
    consistent: bool


def gradient_cap(topology: SurfaceTopology) -> float:
    """(3/2) sqrt(area)."""
    return 1.5 * math.sqrt(topology.area)


def main_theorem_bounds(topology: SurfaceTopology, ledger: ConstantsLedger, d_wp: float) -> MainBounds:
    if d_wp < 0:
        raise OutOfRange("distance must be nonnegative")
    if ledger.topology != topology:
        ledger = replace(ledger, topology=topology)
    lower = ledger.A_S * (d_wp - ledger.delta)
    upper = 3 * math.sqrt(math.pi / 2 * topology.abs_euler) * d_wp
    return MainBounds(lower, upper, lower <= 0 or lower <= upper)


# -- W-volume ---------------------------------------------------------------


def w_volume_scale(W: float, t: float, chi: int) -> float:
    return W - t * math.pi * chi


class Interval(NamedTuple):
    lo: float
    hi: float


def core_volume_sandwich(v_r: float, l_beta: float, incompressible: bool = False, abs_chi: int | None = None) -> Interval:
    if l_beta < 0:
        raise OutOfRange("bending length must be nonnegative")
    if incompressible:
        if abs_chi is None:
            raise PreconditionViolated("abs_chi needed for the incompressible check")
        if l_beta > 6 * math.pi * abs_chi:
            warnings.warn(
                f"bending length {l_beta} exceeds 6 pi |chi| = {6 * math.pi * abs_chi}",
                RuntimeWarning,
                stacklevel=2,
            )
    return Interval(v_r + l_beta / 4, v_r + l_beta / 2)


@dataclass(frozen=True)
class Unbending:
    theta: np.ndarray
    ell: np.ndarray
    dell: np.ndarray
    dW: np.ndarray
    gap: float
    dw_integral: float
    choi_series: bool
    phi_bound: np.ndarray = field(repr=False)

    @property
    def dvc(self) -> np.ndarray:
        return 0.5 * self.ell


def unbending_functionals(theta, ell, rtol: float = 1e-2) -> Unbending:
    """Bending-deformation functionals for a length profile sampled on [T, pi].

    ``gap`` is (1/4) int_T^pi ell + (1/8) T ell(T); ``dw_integral`` is the
    integral of dW from T to pi, reported alongside for comparison.
    """
    theta = np.asarray(theta, dtype=float)
    ell = np.asarray(ell, dtype=float)
    if theta.shape != ell.shape or theta.ndim != 1:
        raise PreconditionViolated("theta and ell must be matching 1-D arrays")
    if theta.size < 5:
        raise GridTooCoarse("need at least 5 samples")
    if np.any(np.diff(theta) <= 0):
        raise PreconditionViolated("theta grid must be increasing")
    if np.any(ell < 0):
        raise PreconditionViolated("lengths must be nonnegative")
    dell = np.gradient(ell, theta, edge_order=2)
    # compare against the derivative on the half-resolution grid
    coarse = np.gradient(ell[::2], theta[::2], edge_order=2)
    scale = np.max(np.abs(dell)) + np.max(np.abs(ell)) / (theta[-1] - theta[0])
    if scale > 0 and np.max(np.abs(coarse - dell[::2])) > rtol * scale:
        raise GridTooCoarse("derivative estimate changes under grid halving")
    dW = 0.25 * (ell - theta * dell)
    T = theta[0]
    gap = 0.25 * simpson(ell, x=theta) + 0.125 * T * ell[0]
    dw_int = simpson(dW, x=theta)
    choi = bool(np.all(dell[ell > 0] < 0)) if np.any(ell > 0) else True
    phi_bound = 2.5 * np.sqrt(theta * ell)
    return Unbending(theta, ell, dell, dW, float(gap), float(dw_int), choi, phi_bound)
