from __future__ import annotations

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from surgeflow import schwarzian as sw
from surgeflow.errors import CriticalPoint, OutOfRange, PreconditionViolated

Z = sp.symbols("z")


def sympy_schwarzian(expr):
    d1 = sp.diff(expr, Z)
    return sp.lambdify(Z, sp.diff(d1, Z, 2) / d1 - sp.Rational(3, 2) * (sp.diff(d1, Z) / d1) ** 2, "numpy")


SYMBOLIC = {
    "koebe": (sw.koebe(), Z / (1 - Z) ** 2),
    "odd_koebe": (sw.odd_koebe(), Z / (1 - Z**2)),
    "exp": (sw.exp_map(), sp.exp(Z) - 1),
    "log": (sw.log_map(), -sp.log(1 - Z)),
    "strip": (sw.strip_map(), sp.log((1 + Z) / (1 - Z)) / 2),
    "quadratic": (sw.quadratic(0.3 + 0.1j), Z + (sp.Rational(3, 10) + sp.I / 10) * Z**2),
}

SAMPLES = np.array([0.0, 0.2, -0.31 + 0.17j, 0.45j, 0.1 - 0.4j, 0.8 * np.exp(0.7j), -0.9])


@pytest.mark.parametrize("name", sorted(SYMBOLIC))
def test_schwarzian_matches_symbolic(name):
    fmap, expr = SYMBOLIC[name]
    oracle = sympy_schwarzian(expr)
    got = sw.schwarzian(fmap, SAMPLES)
    want = np.array([complex(oracle(complex(z))) for z in SAMPLES])
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


def test_slit_map_matches_symbolic():
    c = sp.Rational(1, 2)
    p = (1 + Z) / (1 - Z)
    q = sp.sqrt(c * p**2 + 1 - c)
    oracle = sympy_schwarzian((q - 1) / (q + 1))
    fmap = sw.slit_map(0.5)
    for z in [0.1, -0.2 + 0.3j, 0.6j, 0.85]:
        assert abs(sw.schwarzian(fmap, z) - complex(oracle(complex(z)))) < 1e-9


def test_series_and_closed_routes_agree():
    for fmap in (sw.koebe(), sw.slit_map(0.3), sw.log_map(), sw.rotate(sw.slit_map(0.7), 0.4)):
        z = np.array([0.0, 0.3, -0.2 + 0.35j])
        assert np.allclose(sw.schwarzian(fmap, z, "series"), sw.schwarzian(fmap, z, "closed"), atol=1e-10)


def test_identity_and_exp_values():
    assert sw.schwarzian(sw.identity(), 0.3j) == 0
    assert np.allclose(sw.schwarzian(sw.exp_map(), SAMPLES), -0.5)


def test_koebe_at_origin():
    k = sw.koebe()
    assert sw.schwarzian(k, 0.0) == pytest.approx(-6.0, abs=1e-12)
    b = sw.nehari_coefficients(k, 4)
    assert np.allclose(b, [-2, 1, 0, 0, 0], atol=1e-13)
    assert sw.schwarzian(k, 0.0) == pytest.approx(-6 * b[1], abs=1e-12)
    assert sw.pointwise_norm(sw.QuadDiffDisk.schwarzian_of(k), 0.0) == pytest.approx(1.5, abs=1e-12)


def test_identity_nehari_coefficients_vanish():
    assert np.allclose(sw.nehari_coefficients(sw.identity(), 10), 0)


def test_nehari_needs_fixed_origin():
    with pytest.raises(PreconditionViolated):
        sw.nehari_coefficients(sw.mobius(1, 0.3, 0.3, 1), 3)


def test_out_of_range_without_closed_form():
    f = sw.from_coeffs([0, 1, 0.1], r_max=0.5)
    with pytest.raises(OutOfRange):
        sw.schwarzian(f, 0.7)


def test_critical_point_raises():
    with pytest.raises(CriticalPoint):
        sw.schwarzian(sw.quadratic(0.5), -1.0)


def test_mobius_pole_inside_disk_rejected():
    with pytest.raises(PreconditionViolated):
        sw.mobius(1, 0, 2, 1)


mobius_coeff = st.complex_numbers(min_magnitude=0.1, max_magnitude=3, allow_nan=False, allow_infinity=False)


@given(mobius_coeff, mobius_coeff, st.complex_numbers(max_magnitude=1.0), st.floats(0, 0.85), st.floats(0, 2 * math.pi))
def test_mobius_schwarzian_vanishes(a, b, c, r, t):
    d = 2 * abs(c) + 1.0
    if abs(a * d - b * c) < 1e-3:
        return
    m = sw.mobius(a, b, c, d)
    z = r * complex(math.cos(t), math.sin(t)) * min(m.r_max, 1.0)
    assert abs(sw.schwarzian(m, z, "series")) < 1e-12 * max(1.0, abs(a) + abs(b))


def test_composition_with_mobius_outer_is_invariant():
    f = sw.mobius(1, 0, 0.2, 1)
    g = sw.quadratic(0.2)
    z = 0.15 + 0.1j
    fg = sw.compose_maps(f, g)
    assert sw.schwarzian(fg, z, "series") == pytest.approx(sw.schwarzian(g, z), abs=1e-12)
    assert sw.compose_rule_residual(f, g, z) < 1e-12


def test_composition_with_mobius_inner():
    f = sw.log_map()
    g = sw.mobius(0.5, 0, 0.1, 1)
    z = -0.2 + 0.1j
    want = sw.schwarzian(f, g(z)) * g.derivative(z) ** 2
    assert sw.schwarzian(sw.compose_maps(f, g), z, "series") == pytest.approx(want, abs=1e-12)


@given(st.floats(0, 2 * math.pi), st.floats(0, 0.4), st.floats(0, 2 * math.pi))
def test_rotation_conjugation_rule(theta, r, t):
    k = sw.koebe()
    u = complex(math.cos(theta), math.sin(theta))
    z = r * complex(math.cos(t), math.sin(t))
    lhs = sw.schwarzian(sw.rotate(k, theta), z)
    assert lhs == pytest.approx(sw.schwarzian(k, u * z) * u**2, abs=1e-11)


def test_pointwise_norm_constant_at_origin():
    assert sw.pointwise_norm(sw.QuadDiffDisk.constant(-6), 0.0) == pytest.approx(1.5)
    assert sw.pointwise_norm(sw.QuadDiffDisk.constant(1.0), 0.999999) < 1e-10
    with pytest.raises(OutOfRange):
        sw.pointwise_norm(sw.QuadDiffDisk.constant(1.0), 1.0)


def test_lp_norms_of_constant_differential():
    c, R = 2.0 - 1.0j, 0.9
    phi = sw.QuadDiffDisk.constant(c)
    # |phi|/rho integrated against rho dA is the Euclidean integral of |phi|
    l1 = sw.lp_norm(phi, 1, radius=R)
    assert l1.converged and l1.value == pytest.approx(abs(c) * math.pi * R**2, rel=1e-10)
    l2_sq = math.pi * abs(c) ** 2 / 2 * (1 - (1 - R**2) ** 3) / 6
    assert sw.lp_norm(phi, 2, radius=R).value == pytest.approx(math.sqrt(l2_sq), rel=1e-10)
    sup = sw.lp_norm(phi, math.inf, radius=R)
    assert sup.value == pytest.approx(abs(c) / 4, rel=1e-12)


def test_lp_norm_of_zero_and_bad_p():
    zero = sw.QuadDiffDisk.constant(0)
    for p in (1, 2, math.inf):
        assert sw.lp_norm(zero, p).value == 0
    with pytest.raises(PreconditionViolated):
        sw.lp_norm(zero, 3)


def test_koebe_sup_norm():
    res = sw.lp_norm(sw.QuadDiffDisk.schwarzian_of(sw.koebe()), math.inf, radius=0.99)
    assert abs(res.value - 1.5) < 1e-3


def test_zoo_contents():
    zoo = sw.load_zoo()
    names = {e.name for e in zoo}
    assert {"identity", "koebe", "slit_0.5", "scale_0.9"} <= names
    koebe = next(e for e in zoo if e.name == "koebe")
    assert koebe.certified_radius is None and not koebe.into_disk
    assert next(e for e in zoo if e.name == "identity").certified_radius == math.inf


def test_zoo_kraus_nehari_and_area_theorem():
    for e in sw.load_zoo():
        sup = sw.lp_norm(sw.QuadDiffDisk.schwarzian_of(e.fmap), math.inf, radius=0.99)
        assert sup.value <= 1.5 + 1e-6, e.name
        f = sw.centered(e.fmap)
        assert sw.area_sum(sw.nehari_coefficients(f, 20)) <= 1 + 1e-10, e.name


def test_zoo_nehari_relation():
    for e in sw.load_zoo():
        f = sw.centered(e.fmap)
        b = sw.nehari_coefficients(f, 2)
        s0 = sw.schwarzian(f, 0.0)
        assert abs(s0 + 6 * b[1]) <= 1e-8 * max(1.0, abs(s0)), e.name


def test_slit_radius_and_image():
    c = 0.5
    rho = sw.slit_parameter_radius(c)
    f = sw.slit_map(c)
    # the slit tip is the image of the Koebe singular direction z = -1
    assert abs(f(-0.999999) + rho) < 1e-3
    z = 0.95 * np.exp(1j * np.linspace(0, 2 * np.pi, 200))
    assert np.all(np.abs(f(z)) < 1)


def test_bigdisk_bound_values():
    assert sw.bigdisk_bound(0) == 1.5
    assert sw.bigdisk_bound(2.0) == pytest.approx(1.5 / math.cosh(1.0))
    assert sw.bigdisk_bound(2.0) == pytest.approx(0.97208, abs=1e-5)
    assert sw.bigdisk_bound(math.inf) == 0
    with pytest.raises(OutOfRange):
        sw.bigdisk_bound(-1)


def test_bigdisk_holds_on_certified_zoo():
    for e in sw.load_zoo():
        if e.certified_radius is not None:
            assert sw.check_bigdisk(e.fmap, e.certified_radius).holds, e.name


def test_enclosed_area_is_positive_for_koebe():
    b = sw.nehari_coefficients(sw.koebe(), 10)
    assert sw.enclosed_area(b, 1.5) == pytest.approx(math.pi * (1.5**2 - 1.5**-2))


def test_ahlfors_weill_values():
    assert sw.ahlfors_weill_distance(0) == 0
    assert sw.ahlfors_weill_distance(1 / 3) == pytest.approx(0.5 * math.log(5))
    ts = np.linspace(0, 0.49, 50)
    vals = [sw.ahlfors_weill_distance(t) for t in ts]
    assert np.all(np.diff(vals) > 0)
    for t in np.linspace(0, 1 / 3, 100):
        assert sw.ahlfors_weill_distance(t) <= sw.ahlfors_weill_linear(t)
    with pytest.raises(OutOfRange):
        sw.ahlfors_weill_distance(0.5)


def test_skinning_distance_bound():
    assert sw.skinning_distance_bound(0, 0.5, 1.0) == (0, 0)
    b = sw.skinning_distance_bound(1 / 3, 0.5, 4 * math.pi)
    assert b.teich == pytest.approx(2.0)
    assert b.wp == pytest.approx(2 * math.sqrt(4 * math.pi))
    assert b.wp == pytest.approx(7.090, abs=1e-3)
    assert sw.skinning_distance_bound(1 / 3, 1 - 1e-9, 1.0).teich > 1e8


def test_pointwise_from_l2():
    assert sw.pointwise_from_l2(0, 0.3) == 0
    assert sw.pointwise_from_l2(1, 0.25) == pytest.approx(2.0)
    assert sw.pointwise_from_l2(3, 5.0) == pytest.approx(3 / math.sqrt(math.asinh(1)))
