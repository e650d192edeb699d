import itertools
import json

import numpy as np
import pytest

from radmax.localization import (CertificateFailure, FiniteMetricMeasureSpace, TimeSet, brute_max,
                                 certify_localization, discrete_constants, lattice_space, random_space,
                                 run_selection, single_radius_l1, weak_doubling_at, weak_norm_probe)


def _double_loop_max(space, radii, f):
    out = np.zeros(space.P)
    for x in range(space.P):
        for r in radii:
            num = den = 0.0
            for y in range(space.P):
                if space.distances[x, y] < r:
                    num += abs(f[y]) * space.weights[y]
                    den += space.weights[y]
            out[x] = max(out[x], num / den)
    return out


def test_validation():
    with pytest.raises(ValueError):
        FiniteMetricMeasureSpace(np.zeros((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        FiniteMetricMeasureSpace(np.array([[0, 1], [2, 0.0]]), np.ones(2))
    with pytest.raises(ValueError):
        FiniteMetricMeasureSpace(np.array([[0, 1], [1, 0.0]]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        FiniteMetricMeasureSpace(np.array([[0, 0], [0, 0.0]]), np.ones(2))
    bad = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0.0]])
    with pytest.raises(ValueError, match="triangle"):
        FiniteMetricMeasureSpace(bad, np.ones(3))


def test_timeset_blocks():
    T = TimeSet([1.0, 1.5, 2.0, 3.9, 4.0, 9.0], n=2.0)
    assert [T.block(r) for r in T.radii] == [0, 0, 1, 1, 2, 3]
    assert sorted(T.blocks()) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        TimeSet([2.0, 1.0])
    with pytest.raises(ValueError):
        TimeSet([1.0, 1.5], lacunarity=2.0)


def test_brute_max_examples():
    s = FiniteMetricMeasureSpace.from_points([0.0, 1.0, 2.0])
    f = np.array([3.0, 0.0, 0.0])
    M = brute_max(s, [0.5, 1.5, 2.5], f)
    np.testing.assert_allclose(M, [3.0, 1.0, 1.0])
    np.testing.assert_allclose(brute_max(s, [0.5], f), np.abs(f))


def test_brute_max_against_double_loop(rng):
    for _ in range(5):
        s = random_space(rng, 25)
        f = rng.normal(size=25)
        radii = np.sort(rng.uniform(0.1, 3.0, 4))
        np.testing.assert_allclose(brute_max(s, radii, f), _double_loop_max(s, radii, f), rtol=1e-12)


def test_constants_single_point():
    s = FiniteMetricMeasureSpace(np.zeros((1, 1)), np.array([2.0]))
    c = discrete_constants(s, 2.0)
    assert (c.K0, c.K1, c.K) == (1.0, 1.0, 1.0)


def test_constants_line_oracle():
    # three unit-spaced points: exhaustive check over radii on a fine mesh
    s = FiniteMetricMeasureSpace.from_points([0.0, 1.0, 2.0], np.array([1.0, 2.0, 4.0]))
    n = 2.0
    c = discrete_constants(s, n)
    k0 = k1 = k = 1.0
    for r in np.linspace(0.01, 5, 2000):
        m = s.ball_measures(r)
        mc = s.ball_measures(1.5 * r)
        A = s.balls(r)
        k0 = max(k0, (mc / m).max())
        for x, y in itertools.product(range(3), repeat=2):
            if (A[x] & A[y]).any():
                k1 = max(k1, m[y] / m[x])
            if A[x, y]:
                k = max(k, mc[y] / m[x])
    assert c.K0 == pytest.approx(k0) and c.K1 == pytest.approx(k1) and c.K == pytest.approx(k)


def test_strong_within_product(rng):
    for _ in range(5):
        s = random_space(rng, 20)
        c = discrete_constants(s, 3.0)
        assert c.K <= c.K0 * c.K1 * (1 + 1e-12)
        i, j, r = c.witnesses["K1"]
        assert weak_doubling_at(s, r) == pytest.approx(c.K1)


def test_single_radius_examples():
    s = FiniteMetricMeasureSpace.from_points([0.0, 1.0])
    assert single_radius_l1(s, 0.5)[0] == pytest.approx(1.0)
    assert single_radius_l1(s, 2.0)[0] == pytest.approx(1.0)
    # a heavy neighbour: the light point's mass spreads over the heavy point's average
    s = FiniteMetricMeasureSpace.from_points([0.0, 1.0, 3.0], np.array([1.0, 10.0, 1.0]))
    norm, col = single_radius_l1(s, 1.5)
    cols = [1 / 11 + 10 / 11, 1 / 11 + 10 / 11, 1 / 1]
    assert norm == pytest.approx(max(cols))


def test_weak_norm_probe(rng):
    s = FiniteMetricMeasureSpace.from_points([0.0, 1.0, 2.0])
    val, wit = weak_norm_probe(s, [0.5, 1.5, 2.5])
    # the middle point mass gives M = 1/2, 1, 1/2, so 1/2 * 3 wins
    assert val == pytest.approx(1.5) and wit == {"point_mass": 1}
    s = lattice_space(4, 2)
    v0, _ = weak_norm_probe(s, [1.1, 2.1])
    v1, _ = weak_norm_probe(s, [1.1, 2.1], rng, trials=20)
    assert v1 >= v0


def test_zero_input_gives_empty_state():
    s = lattice_space(3, 2)
    st = run_selection(s, TimeSet([1.1, 2.5]), np.zeros(s.P), 1.0)
    assert st.family == [] and st.selected == {}
    assert certify_localization(st, s, TimeSet([1.1, 2.5]), np.zeros(s.P)).passed


def test_two_point_trace():
    s = FiniteMetricMeasureSpace.from_points([0.0, 1.0])
    T = TimeSet([0.5, 1.5], n=2.0)
    f = np.array([3.0, 0.0])
    st = run_selection(s, T, f, lam=1.0, K0=1.0)
    # averages: radius 1.5 gives 1.5 at both centers; radius 0.5 gives 3 and 0
    assert [(B.center, B.R) for B in st.family] == [(0, 1.5), (1, 1.5)]
    # inner radii start at 1.5 * 2/3 = 1; center 1 needs the next distinct ball
    assert [B.R_tilde for B in st.family] == [1.0, 1.25]
    assert [B.R_zero for B in st.family] == [0.5, 0.25]
    assert st.parity == 0 and st.order == [0]
    D = [B.D for B in st.half]
    assert D[0].tolist() == [True, False] and D[1].tolist() == [False, True]
    cert = certify_localization(st, s, T, f)
    assert cert.passed and cert.C1 == 32.0 and cert.C2 == 0.5


def test_random_certificates(rng):
    for _ in range(10):
        s = random_space(rng, 30)
        T = TimeSet(np.sort(rng.uniform(0.2, 4, 5)), n=2.0)
        f = rng.exponential(size=30) * (rng.random(30) < 0.4)
        lam = float(np.quantile(brute_max(s, T, f), 0.5)) or 1.0
        st = run_selection(s, T, f, lam)
        cert = certify_localization(st, s, T, f)
        cert.raise_if_failed()
        for Ak in st.A.values():
            assert Ak.dtype == bool


def test_certificate_failure_raises():
    s = FiniteMetricMeasureSpace.from_points([0.0, 1.0])
    T = TimeSet([0.5, 1.5], n=2.0)
    f = np.array([3.0, 0.0])
    st = run_selection(s, T, f, lam=1.0, K0=1.0)
    st.A[0] = np.array([True, True])
    st.A[1] = np.array([True, False])
    cert = certify_localization(st, s, T, f)
    assert not cert.disjoint
    with pytest.raises(CertificateFailure):
        cert.raise_if_failed()


def test_json_round_trip(tmp_path):
    s = FiniteMetricMeasureSpace.from_points([[0, 0], [3, 4], [1, 1]], np.array([1.0, 2.0, 0.5]))
    path = tmp_path / "space.json"
    s.save(path)
    d = json.loads(path.read_text())
    assert d["distances"][1] == [5.0] and len(d["distances"][2]) == 2
    t = FiniteMetricMeasureSpace.load(path)
    np.testing.assert_array_equal(t.distances, s.distances)
    np.testing.assert_array_equal(t.weights, s.weights)


def test_json_validation():
    with pytest.raises(ValueError, match="missing"):
        FiniteMetricMeasureSpace.from_dict({"points": [0], "weights": [1]})
    with pytest.raises(ValueError, match="lower triangle"):
        FiniteMetricMeasureSpace.from_dict({"points": [0, 1], "distances": [[1], [1]], "weights": [1, 1]})


def test_scaling_probe_rows():
    from radmax.localization import scaling_probe
    rows = scaling_probe([1, 2])
    # d = 1: three points on a line, the middle point mass gives 1/2 * 3
    assert rows[0]["P"] == 3 and rows[0]["probe"] == pytest.approx(1.5)
    assert rows[1]["P"] == 9 and rows[1]["probe"] >= rows[0]["probe"]
