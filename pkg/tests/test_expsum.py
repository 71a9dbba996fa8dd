import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from strichlab.expsum import (
    CoefficientVector,
    GridTooSmall,
    build_cutoff,
    classify_arc,
    coefficient_family,
    dirichlet_approx,
    eval_F,
    eval_G,
    exact_grid_sizes,
    exp_sum,
    exp_sum_norm,
    farey_fractions,
    level_set_measure,
    major_arc_ratio,
    minor_arc_ratio,
    verify_i1,
    verify_i2,
    weyl_sum,
)
from strichlab.lattice import Cube, enumerate_cube, level_sets


def random_cube_vector(rng, r, N_max=16, r0=0):
    N = int(rng.integers(1, N_max + 1))
    b = tuple(int(rng.integers(-N, N + 1)) if i >= r0 else int(rng.integers(0, N + 1)) for i in range(r))
    pts = enumerate_cube(Cube(b, N), r0)
    vals = rng.standard_normal(len(pts)) + 1j * rng.standard_normal(len(pts))
    return CoefficientVector(pts, vals)


def direct_norm(a, p, r1, m):
    """Brute-force grid mean of |exp_sum|^p, one point at a time."""
    ts = 2 * math.pi * np.arange(m) / m
    if r1 == 0:
        vals = [abs(exp_sum(a, t)) ** p for t in ts]
    else:
        vals = [abs(exp_sum(a, t, (x,))) ** p for t in ts for x in ts]
    return float(np.mean(vals)) ** (1 / p)


# ---------------------------------------------------------------- coefficient vectors

def test_coefficient_vector_validation():
    with pytest.raises(ValueError):
        CoefficientVector([(0, 1), (0, 1)], [1, 2])
    with pytest.raises(ValueError):
        CoefficientVector([(0, 1)], [1, 2])
    a = CoefficientVector([(0, 1), (2, 2)], [3, 4j])
    assert a.norm2 == pytest.approx(5, abs=1e-12)


# ---------------------------------------------------------------- exp_sum examples

def test_exp_sum_examples():
    one = CoefficientVector([(2, 3, -1)], [1.0])
    v = exp_sum(one, 0.7, (0.3,))
    assert v == pytest.approx(cmath.exp(-0.7j * 14 - 0.3j), abs=1e-13)
    assert abs(v) == pytest.approx(1, abs=1e-14)
    rng = np.random.default_rng(1)
    a = random_cube_vector(rng, 2)
    assert exp_sum(a, 0) == pytest.approx(a.values.sum(), abs=1e-10)
    ones = CoefficientVector(enumerate_cube(Cube((0, 0), 4)), np.ones(25))
    assert exp_sum(ones, 2 * math.pi) == pytest.approx(25, abs=1e-9)


def test_exp_sum_norm_examples():
    one = CoefficientVector([(5, -2)], [1.0])
    for p in (2, 3, 4, 7.5):
        assert exp_sum_norm(one, p, r1=1) == pytest.approx(1, abs=1e-12)
    ones = CoefficientVector(enumerate_cube(Cube((0, 0), 5)), np.ones(36))
    counts = [len(g) for g in level_sets(ones.support).values()]
    assert exp_sum_norm(ones, 2) ** 2 == pytest.approx(sum(c * c for c in counts), rel=1e-12)


# ---------------------------------------------------------------- invariants

def test_parseval_all_torus():
    rng = np.random.default_rng(7)
    for _ in range(100):
        r = int(rng.integers(1, 4))
        a = random_cube_vector(rng, r, N_max=6 if r == 3 else 16)
        assert exp_sum_norm(a, 2, r1=r) == pytest.approx(a.norm2, rel=1e-10)


def test_level_set_identity():
    rng = np.random.default_rng(8)
    for _ in range(100):
        r = int(rng.integers(1, 4))
        r1 = int(rng.integers(0, r + 1))
        a = random_cube_vector(rng, r, N_max=6 if r == 3 else 16, r0=r - r1)
        vals = dict(zip(a.support, a.values))
        groups = level_sets(a.support, keep_torus=True, r0=r - r1)
        expected = math.sqrt(sum(abs(sum(vals[xi] for xi in g)) ** 2 for g in groups.values()))
        assert exp_sum_norm(a, 2, r1=r1) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("p,r1", [(2, 0), (4, 0), (3, 0), (4, 1), (2.5, 1)])
def test_fft_matches_direct(p, r1):
    rng = np.random.default_rng(3)
    pts = enumerate_cube(Cube((1, -2), 3))
    a = CoefficientVector(pts, rng.standard_normal(len(pts)) + 1j * rng.standard_normal(len(pts)))
    m = max(exact_grid_sizes(a, 4, r1)) * 2
    got = exp_sum_norm(a, p, r1, grid=m)
    ref = direct_norm(a, p, r1, m)
    if float(p).is_integer() and p % 2 == 0:
        assert got == pytest.approx(ref, rel=1e-10)
    else:
        assert got == pytest.approx(ref, rel=1e-5)


def test_even_p_grid_doubling():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = random_cube_vector(rng, 2)
        m = exact_grid_sizes(a, 4, 0)
        assert abs(exp_sum_norm(a, 4, grid=m) - exp_sum_norm(a, 4, grid=2 * m[0])) < 1e-12 * exp_sum_norm(a, 4)


def test_grid_too_small():
    a = CoefficientVector(enumerate_cube(Cube((0, 0), 3)), np.ones(16))
    m = exact_grid_sizes(a, 4, 0)[0]
    with pytest.raises(GridTooSmall):
        exp_sum_norm(a, 4, grid=m - 1)


def test_shift_covariance_pure_torus():
    # Galilean boost x -> x - 2tc is measure preserving on the torus when every coordinate is kept
    rng = np.random.default_rng(11)
    for _ in range(5):
        a = random_cube_vector(rng, 2, N_max=6)
        for _ in range(20):
            c = rng.integers(-10, 11, size=2)
            b = a.shifted(c)
            for p in (2, 4, 6):
                assert exp_sum_norm(b, p, r1=2) == pytest.approx(exp_sum_norm(a, p, r1=2), rel=1e-8)


def test_conjugation_symmetry():
    rng = np.random.default_rng(12)
    a = random_cube_vector(rng, 2)
    t = 0.37
    assert exp_sum(a.conj(), -t) == pytest.approx(exp_sum(a, t).conjugate(), abs=1e-9)
    assert exp_sum_norm(a.conj(), 4) == pytest.approx(exp_sum_norm(a, 4), rel=1e-12)


# ---------------------------------------------------------------- sweeps

def test_verify_i1_single_mode_flat():
    rep = verify_i1(2, 0, 4, [4, 8, 16], shifts=3, families=("slab",))
    # a slab with M = 1 on a line of the cube; the ratio still grows, but a single mode gives 1
    assert rep.fit is not None
    a = coefficient_family("constant", [(3, 4)])
    assert exp_sum_norm(a, 4) / a.norm2 == pytest.approx(1, abs=1e-12)


def test_verify_i1_constant_family_slope():
    rep = verify_i1(2, 0, 4, [4, 8, 16, 32], shifts=4, families=("constant",))
    assert rep.fit.slope <= 0.5 + 0.15
    assert set(rep.spread) == {4, 8, 16, 32}
    assert all(set(row) == {"N", "p", "r0", "r1", "family", "shift", "ratio"} for row in rep.rows)


def test_verify_i1_pure_torus_r1_one():
    rep = verify_i1(0, 1, 8, [4, 8, 16, 32], trials=2, shifts=3)
    assert rep.fit.slope <= 1 / 2 - 3 / 8 + 0.15


def test_verify_i1_deterministic():
    a = verify_i1(2, 0, 4, [4, 8, 16], trials=2, shifts=3, seed=5)
    b = verify_i1(2, 0, 4, [4, 8, 16], trials=2, shifts=3, seed=5)
    assert a.rows == b.rows


def test_verify_i2_degenerate_and_thin():
    rep = verify_i2(2, 0, 4, [(8, 8), (64, 8)], trials=2, shifts=3)
    thick, thin = rep.rows
    # N1 = N2: the slab is nearly the whole cube
    assert thick["ratio_i2"] <= 2 * thick["ratio_i1"] and thick["ratio_i2"] >= thick["ratio_i1"] / 2
    # the sum is bounded pointwise by |K_m|^{1/2} ||a||
    assert thin["M"] == "1"
    assert thin["ratio_i2"] <= math.sqrt(thin["slab_size"]) * (1 + 1e-12)


def test_verify_i2_gain_fit():
    rep = verify_i2(2, 0, 4, [(8, 8), (32, 8), (128, 8)], trials=1, shifts=2)
    assert rep.gain_fit is not None
    assert all(row["gain"] <= 1 + 1e-12 or row["N1"] == row["N2"] for row in rep.rows)


# ---------------------------------------------------------------- cutoff

def test_cutoff_examples():
    c = build_cutoff(5, 64)
    assert c(5) == 1 and c(69) == 1
    assert c(5 - 64) == 0 and c(5 + 128) == 0
    assert np.abs(c.increments()).max() <= math.pi / (2 * 64) + 1e-15
    with pytest.raises(ValueError):
        build_cutoff(0, 1)


@pytest.mark.parametrize("N", [2, 3, 8, 64, 257])
def test_cutoff_conditions(N):
    c = build_cutoff(-3, N)
    n = np.arange(-3 - 3 * N, -3 + 4 * N)
    v = c(n)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[(n >= -3) & (n <= -3 + N)] == 1)
    assert np.all(v[(n <= -3 - N) | (n >= -3 + 2 * N)] == 0)
    # ramp slope max: pi/2 for sin^2, 3 sqrt(3) pi / 8 for sin^4; increments rise and fall twice
    for sq, bound in ((False, math.pi / 2), (True, 3 * math.sqrt(3) * math.pi / 8)):
        assert c.increment_constant(sq) <= bound + 1e-12
        assert c.variation_constant(sq) <= 4 * bound + 1e-9


# ---------------------------------------------------------------- Weyl sums

def test_weyl_examples():
    for N in (4, 16, 50):
        c = build_cutoff(3, N)
        f0 = weyl_sum(c, 0)
        assert N + 1 <= f0.real <= 3 * N and abs(f0.imag) < 1e-9
        n = c.support()
        direct = sum(c(k) ** 2 * cmath.exp(1j * math.pi * k * k) for k in n)
        assert weyl_sum(c, 0.5) == pytest.approx(direct, abs=1e-9)
        assert weyl_sum(c, Fraction(1, 2)) == pytest.approx(direct, abs=1e-9)


@settings(max_examples=50)
@given(st.integers(-50, 50), st.integers(2, 60), st.floats(0, 1))
def test_weyl_trivial_bound_and_period(b, N, t):
    c = build_cutoff(b, N)
    f0 = weyl_sum(c, 0).real
    assert abs(weyl_sum(c, t)) <= f0 * (1 + 1e-12)
    assert abs(weyl_sum(c, Fraction(t) + 1)) == pytest.approx(abs(weyl_sum(c, Fraction(t))), abs=1e-9)


# ---------------------------------------------------------------- Dirichlet and arcs

def test_dirichlet_examples():
    r = dirichlet_approx(0.49, 10)
    assert (r.a, r.q) == (1, 2) and r.error == pytest.approx(0.01, abs=1e-12) and r.error < 1 / 20
    r = dirichlet_approx(Fraction(1, 3), 100)
    assert (r.a, r.q, r.error) == (1, 3, 0.0)
    assert (dirichlet_approx(0.2, 1).a, dirichlet_approx(0.2, 1).q) == (1, 1)
    assert dirichlet_approx(0.2, 1).error == pytest.approx(0.2)
    assert dirichlet_approx(0.7, 1).error == pytest.approx(0.3)


def test_dirichlet_postcondition_bulk():
    rng = np.random.default_rng(2025)
    ts = rng.random(100_000)
    Qs = rng.integers(1, 2000, size=100_000)
    for t, Q in zip(ts, Qs):
        r = dirichlet_approx(float(t), int(Q))
        assert r.q <= Q and math.gcd(r.a, r.q) == 1 and 1 <= r.a <= r.q
        assert r.error < 1 / (r.q * Q)


def test_classify_examples():
    assert classify_arc(Fraction(1, 2), 1024).kind == "major"
    lab = classify_arc(0.25, 1024)
    assert lab.kind == "minor"
    lab = classify_arc(0, 1024)
    assert (lab.kind, lab.a, lab.q) == ("major", 1, 1)
    assert classify_arc(1, 64).q == 1
    # q = 3 needs 3^10 <= N
    assert classify_arc(Fraction(1, 3), 3**10 - 1).kind == "minor"
    assert classify_arc(Fraction(1, 3), 3**10).kind == "major"


@settings(max_examples=200)
@given(st.floats(0, 1), st.integers(2, 10**6))
def test_classify_matches_definition(t, N):
    lab = classify_arc(t, N)
    width = N ** (0.1 - 2)
    near = [(a, q) for q in range(1, 5) if q ** 10 <= N for a in range(1, q + 1)
            if math.gcd(a, q) == 1 and min(abs(t - a / q), 1 - abs(t - a / q)) <= width * (1 - 1e-9)]
    if near:
        assert lab.is_major
    if lab.is_major:
        assert lab.q ** 10 <= N and lab.distance <= width


def test_major_ratio_examples():
    vals = [major_arc_ratio(N, [(1, 3, 0)], [0]) for N in (64, 256, 1024)]
    assert max(vals) / min(vals) < 1.5
    with pytest.raises(ValueError):
        major_arc_ratio(64, [(2, 4, 0)])
    with pytest.raises(ValueError):
        major_arc_ratio(64, [(1, 3, Fraction(1, 3 * 64))])
    # q = 1 near 0: |f| ~ f(0)
    N = 256
    r = major_arc_ratio(N, [(1, 1, 0)], [0])
    assert r == pytest.approx(weyl_sum(build_cutoff(0, N), 0).real * N ** -1.0, rel=1e-12)


def test_major_ratio_shift_stable():
    for N in (256, 512):
        a = major_arc_ratio(N, [(1, 5, 0), (2, 7, 0.5 / (7 * N))], [0])
        b = major_arc_ratio(N, [(1, 5, 0), (2, 7, 0.5 / (7 * N))], [1])
        assert abs(a - b) < 0.1 * max(a, b)


def test_minor_ratio():
    golden = (math.sqrt(5) - 1) / 2
    vals = [minor_arc_ratio(N, [golden], [0, 3]) for N in (256, 512, 1024)]
    assert max(vals) < 1 and max(vals) / min(vals) < 3
    with pytest.raises(ValueError):
        minor_arc_ratio(1024, [0.5])


# ---------------------------------------------------------------- level sets in time

def test_level_set_measure_examples():
    N = 16
    pts = enumerate_cube(Cube((0, 0), N))
    a = CoefficientVector(pts, np.ones(len(pts)) / math.sqrt(len(pts)))
    small = CoefficientVector(enumerate_cube(Cube((2, 2), 8)), np.ones(81) / 9)
    l1 = np.abs(small.values).sum()
    assert l1 / N < 0.99
    assert level_set_measure(small, l1 / N + 0.01, N).measure == 0.0
    ms = [level_set_measure(a, d, N).measure for d in (0.05, 0.1, 0.3, 0.6, 0.9)]
    assert all(x >= y for x, y in zip(ms, ms[1:]))
    # a constant vector concentrates near rationals with small denominator
    rep = level_set_measure(a, 0.5, N)
    assert 0 < rep.measure and rep.measure / rep.bound < 20
    with pytest.raises(ValueError):
        level_set_measure(CoefficientVector(pts, np.ones(len(pts))), 0.5, N)


# ---------------------------------------------------------------- F and G

def test_F_G_examples():
    assert eval_F(0.0, 64, 2, 1.5) == 1.0
    assert farey_fractions(2) == [(1, 1), (1, 2)]
    N, r, g = 32, 2, 1.5
    expected = eval_F(0.5 - 1, N, r, g) + 2 ** (-r * g / 2) * eval_F(0.0, N, r, g)
    assert eval_G(0.5, N, 2, r, g) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        eval_F(0.0, 8, 2, 1.0)


def test_farey_counts():
    # |{a/q : q <= Q}| = sum of Euler phi
    phi = lambda q: sum(1 for a in range(1, q + 1) if math.gcd(a, q) == 1)
    for Q in (1, 5, 12):
        assert len(farey_fractions(Q)) == sum(phi(q) for q in range(1, Q + 1))


def test_F_l1_scaling():
    vals = []
    for N in (32, 64, 128, 256):
        f = lambda th: eval_F(th, N, 3, 1.0)
        half, _ = quad(f, 0, math.pi, points=[1 / N**2, 10 / N**2, math.pi - 10 / N**2], limit=400)
        vals.append(2 * half * N**2)
    assert max(vals) / min(vals) < 1.1
