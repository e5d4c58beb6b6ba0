from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surgeflow import paths as pa
from surgeflow.errors import PreconditionViolated, SizeLimit


def excursion_oracle(vertices, Z, eps, per_segment=20000):
    """Midpoint-rule length of the part of the path outside every closed eps-ball."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    zs = np.asarray(Z, dtype=float).reshape(len(Z), v.shape[1]) if len(Z) else np.zeros((0, v.shape[1]))
    total = 0.0
    u = (np.arange(per_segment) + 0.5) / per_segment
    for p, q in zip(v[:-1], v[1:]):
        seg = np.linalg.norm(q - p)
        pts = p[None, :] + u[:, None] * (q - p)[None, :]
        if zs.shape[0]:
            d = np.min(np.linalg.norm(pts[:, None, :] - zs[None, :, :], axis=-1), axis=1)
            outside = d > eps
        else:
            outside = np.ones(per_segment, bool)
        total += seg * outside.mean()
    return total


def test_separation_examples():
    assert pa.check_separation([0, 10, 20], 1, 5)
    assert not pa.check_separation([0, 1, 2], 2, 5)


def test_separation_matches_exhaustive_on_random_sets():
    rng = np.random.default_rng(7)
    for _ in range(20):
        pts = rng.random((20, 2))
        assert pa.check_separation(pts, 4, 0.9) == pa.check_separation_exhaustive(pts, 4, 0.9)
        assert pa.check_separation(pts, 2, 0.3) == pa.check_separation_exhaustive(pts, 2, 0.3)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=9), st.integers(1, 3), st.floats(0.01, 1.5))
def test_separation_property(pts, N, delta):
    assert pa.check_separation(pts, N, delta) == pa.check_separation_exhaustive(pts, N, delta)


def test_max_separation_delta_is_sharp():
    pts = np.random.default_rng(3).random((6, 2))
    d = pa.max_separation_delta(pts, 2)
    assert pa.check_separation(pts, 2, d)
    assert not pa.check_separation(pts, 2, d * (1 + 1e-9))


def test_separation_size_cap():
    with pytest.raises(SizeLimit):
        pa.check_separation(np.zeros((300, 2)), 1, 1.0)


def test_separated_set_rejects_bad_input():
    with pytest.raises(PreconditionViolated):
        pa.SeparatedPointSet.build([0, 1, 2], 2, 5)


def test_polypath_point_at_and_length():
    p = pa.PolyPath.build([[0, 0], [3, 0], [3, 4]])
    assert p.length == 7
    assert np.allclose(p.point_at(3 / 7), [3, 0])
    assert np.allclose(p.point_at(5 / 7), [3, 2])
    assert np.allclose(p.point_at(1.0), [3, 4])


def test_excursion_examples():
    seg = pa.PolyPath.build([0.0, 3.0])
    assert pa.excursion_length(seg, [], 0.5) == 3.0
    assert pa.excursion_length(seg, [1.5], 0.5) == pytest.approx(2.0, abs=1e-14)
    inside = pa.PolyPath.build([[0, 0], [0.1, 0.1]])
    assert pa.excursion_length(inside, [[0, 0]], 0.5) == 0


def test_excursion_matches_subdivision_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        verts = rng.random((5, 2))
        Z = rng.random((3, 2))
        eps = float(rng.uniform(0.05, 0.3))
        got = pa.excursion_length(pa.PolyPath.build(verts), Z, eps)
        assert got == pytest.approx(excursion_oracle(verts, Z, eps), abs=5e-4)


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=6), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_excursion_monotone_in_eps(verts, e1, e2):
    path = pa.PolyPath.build(verts)
    Z = [[0.1, -0.2], [0.5, 0.5]]
    lo, hi = sorted((e1, e2))
    assert pa.excursion_length(path, Z, hi) <= pa.excursion_length(path, Z, lo) + 1e-12
    assert pa.excursion_length(path, Z, lo) <= path.length + 1e-12


def test_excursion_tends_to_length():
    path = pa.PolyPath.build([[0, 0], [1, 1], [2, 0]])
    assert pa.excursion_length(path, [[5, 5]], 1e-9) == pytest.approx(path.length)
    assert pa.excursion_length(path, [[1, 0]], 1e-9) == pytest.approx(path.length)


def test_cover_decomposition_examples():
    seg = pa.PolyPath.build([0.0, 3.0])
    assert pa.cover_decomposition(seg, [[10.0]], 0.5) == []
    (step,) = pa.cover_decomposition(seg, [[1.5]], 0.5)
    assert step.t_minus == pytest.approx(1 / 3) and step.t_plus == pytest.approx(2 / 3)
    two = pa.cover_decomposition(pa.PolyPath.build([0.0, 10.0]), [[7.0], [2.0]], 0.5)
    assert [s.index for s in two] == [1, 0]
    assert two[0].t_plus < two[1].t_minus


def test_cover_decomposition_properties_on_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(100):
        inst = pa.random_instance(rng)
        steps = pa.cover_decomposition(*inst)
        prev = 0.0
        for s in steps:
            assert s.t_minus >= prev - 1e-15 and s.t_plus >= s.t_minus
            d = np.linalg.norm(inst.path.point_at(s.t_minus) - inst.path.point_at(s.t_plus))
            assert d <= 2 * inst.eps + 1e-12
            prev = s.t_plus
        # gaps between cover steps avoid every ball
        marks = [0.0] + [t for s in steps for t in (s.t_minus, s.t_plus)] + [1.0]
        for a, b in zip(marks[0::2], marks[1::2]):
            if b <= a:
                continue
            for t in np.linspace(a, b, 7)[1:-1]:
                x = inst.path.point_at(t)
                assert np.min(np.linalg.norm(inst.Z.points - x, axis=1)) > inst.eps - 1e-12
        gaps = pa.gap_sum(inst.path, steps)
        assert gaps <= pa.excursion_length(*inst) + 1e-12
        ends = np.linalg.norm(inst.path.end - inst.path.start)
        assert ends <= gaps + 2 * inst.eps * len(steps) + 1e-12


def test_cover_steps_use_distinct_points():
    rng = np.random.default_rng(9)
    for _ in range(100):
        steps = pa.cover_decomposition(*pa.random_instance(rng))
        idx = [s.index for s in steps]
        assert len(idx) == len(set(idx))


def test_path_fraction_examples():
    seg = pa.PolyPath.build([0.0, 3.0])
    Z = pa.SeparatedPointSet.build([1.5], 1, 10)
    r = pa.verify_path_fraction(seg, Z, 0.5)
    assert r.lhs == pytest.approx(2.0) and r.rhs == pytest.approx(1.8) and r.holds
    loop = pa.PolyPath.build([[0, 0], [1, 0], [1, 1], [0, 0]])
    r = pa.verify_path_fraction(loop, pa.SeparatedPointSet.build([[0.5, 0.5]], 1, 1.0), 0.1)
    assert r.rhs <= 0 and r.holds


def test_path_fraction_precondition():
    Z = pa.SeparatedPointSet.build([[0, 0], [1, 0]], 1, 1.0)
    with pytest.raises(PreconditionViolated):
        pa.verify_path_fraction(pa.PolyPath.build([[0, 0], [1, 1]]), Z, 0.5)


def test_path_fraction_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        assert pa.verify_path_fraction(*pa.random_instance(rng)).holds


def test_random_instance_respects_constraints():
    rng = np.random.default_rng(1)
    for _ in range(50):
        path, Z, eps = pa.random_instance(rng)
        assert 0 < eps < Z.delta / (2 * Z.N)
        assert pa.check_separation_exhaustive(Z.points, Z.N, Z.delta)


def test_load_instances(tmp_path):
    import json

    f = tmp_path / "inst.json"
    f.write_text(json.dumps([{"points": [[0, 0], [2, 0]], "path": [[-1, 0.1], [3, 0.1]], "N": 1, "delta": 2.0, "eps": 0.3}]))
    (inst,) = pa.load_instances(f)
    assert pa.verify_path_fraction(*inst).holds


def test_ball_intervals_merge_across_vertices():
    path = pa.PolyPath.build([[-1, 0], [0, 0], [0, 1]])
    ivs = pa.ball_intervals(path, np.array([0.0, 0.0]), 0.5)
    assert len(ivs) == 1
    a, b = ivs[0]
    assert a == pytest.approx(0.25) and b == pytest.approx(0.75)


def test_pairs_of_points_all_distinct_in_clique_check():
    # a triangle of mutually close points is a 3-clique
    pts = [[0, 0], [0.1, 0], [0, 0.1]]
    assert not pa.check_separation(pts, 2, 0.5)
    assert all(np.linalg.norm(np.subtract(p, q)) < 0.5 for p, q in itertools.combinations(pts, 2))
