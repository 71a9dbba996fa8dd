import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strichlab.experiments import (
    DRIVERS,
    Sweep,
    dyadic_range,
    fit_exponent,
    minor_samples,
    run_sweep,
    theory_exponent,
    write_gnuplot,
    write_manifest,
    write_rows_csv,
    write_summary_csv,
)
from strichlab.expsum import classify_arc


def test_fit_examples():
    f = fit_exponent([(2, 2), (4, 4), (8, 8)])
    assert f.slope == pytest.approx(1, abs=1e-12) and f.intercept == pytest.approx(0, abs=1e-12)
    assert fit_exponent([(2, 3), (4, 3), (8, 3)]).slope == pytest.approx(0, abs=1e-12)
    ns = (16, 32, 64, 128, 256)
    logs = fit_exponent([(n, n ** 0.5 * math.log(n)) for n in ns])
    # closed-form OLS slope cov(x, y) / var(x)
    x = [math.log(n) for n in ns]
    y = [0.5 * t + math.log(t) for t in x]
    mx, my = sum(x) / 5, sum(y) / 5
    ref = sum((a - mx) * (b - my) for a, b in zip(x, y)) / sum((a - mx) ** 2 for a in x)
    assert logs.slope == pytest.approx(ref, rel=1e-12)
    assert logs.slope > 0.5


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_exponent([(2, 1), (4, 2)])
    with pytest.raises(ValueError):
        fit_exponent([(4, 1), (4, 2), (4, 3)])
    with pytest.raises(ValueError):
        fit_exponent([(2, 1), (4, 2), (8, 3), (16, 4)], drop_smallest=2)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(1, 10**4), st.floats(1e-3, 1e3)), min_size=3, max_size=12),
       st.floats(1e-3, 1e3))
def test_fit_residuals_orthogonal_and_scale_invariant(points, c):
    if len({n for n, _ in points}) < 2:
        return
    f = fit_exponent(points)
    x = np.array([p[0] for p in f.points])
    y = np.array([p[1] for p in f.points])
    resid = y - (f.slope * x + f.intercept)
    assert abs(resid.sum()) < 1e-10 * len(x) * (1 + np.abs(y).max())
    assert abs(resid @ x) < 1e-10 * len(x) * (1 + np.abs(y).max()) * (1 + np.abs(x).max())
    g = fit_exponent([(n, v * c) for n, v in points])
    assert g.slope == pytest.approx(f.slope, abs=1e-9)
    assert g.intercept == pytest.approx(f.intercept + math.log(c), abs=1e-9)


def test_dyadic_range():
    assert dyadic_range("4:64") == [4, 8, 16, 32, 64]
    assert dyadic_range("7") == [7]
    assert dyadic_range("3:20") == [3, 6, 12]
    with pytest.raises(ValueError):
        dyadic_range("8:4")


def test_sweep_validation():
    with pytest.raises(ValueError):
        Sweep((8, 4))
    with pytest.raises(ValueError):
        Sweep(((4, 2), (4, 4)))
    assert Sweep([[8, 2], [16, 2]]).schedule == ((8, 2), (16, 2))


def test_empty_and_single_point():
    rep = run_sweep(Sweep(()), "count")
    assert rep.points == [] and rep.fit is None
    rep = run_sweep(Sweep((4,)), "count")
    assert len(rep.points) == 1 and rep.fit is None and rep.points[0].status == "ok"


def test_unknown_driver():
    with pytest.raises(ValueError):
        run_sweep(Sweep((4,)), "nope")


def _csv_bytes(rep):
    buf = io.StringIO()
    write_rows_csv(rep, buf)
    write_summary_csv(rep, buf)
    write_manifest(rep, buf, {"seed": rep.seed})
    return buf.getvalue().encode()


def test_determinism_byte_identical():
    params = {"r0": 2, "r1": 0, "p": 4, "trials": 2, "shifts": 3}
    a = run_sweep(Sweep((4, 8, 16), seed=3), "expsum", params)
    b = run_sweep(Sweep((4, 8, 16), seed=3), "expsum", params)
    assert _csv_bytes(a) == _csv_bytes(b)
    c = run_sweep(Sweep((4, 8, 16), seed=4), "expsum", params)
    assert _csv_bytes(a) != _csv_bytes(c)


def test_parallel_matches_serial():
    params = {"r0": 2, "r1": 0, "p": 4, "trials": 1, "shifts": 2}
    a = run_sweep(Sweep((4, 8, 16), seed=1), "expsum", params)
    b = run_sweep(Sweep((4, 8, 16), seed=1), "expsum", params, workers=2)
    assert _csv_bytes(a) == _csv_bytes(b)


def test_failed_points_flagged():
    rep = run_sweep(Sweep((2, 4, 8, 64), budget=200), "count")
    status = [p.status for p in rep.points]
    assert status == ["ok", "ok", "ok", "failed"]
    assert "BudgetExceeded" in rep.points[-1].error
    assert rep.fit is not None


def test_budget_monotone():
    big = run_sweep(Sweep((2, 4, 8, 16), budget=10**6), "count")
    small = run_sweep(Sweep((2, 4, 8, 16), budget=100), "count")
    for p, q in zip(big.points, small.points):
        if q.status == "ok":
            assert q.value == p.value
    assert any(q.status == "failed" for q in small.points)


def test_theory_exponents():
    assert theory_exponent("expsum", {"r0": 2, "r1": 0, "p": 4}) == 0.5
    assert theory_exponent("projector", {"spheres": "2,2"}) == 0.5
    assert theory_exponent("projector", {"spheres": "4"}) == 1.0
    assert theory_exponent("strichartz", {"spheres": "2", "torus": 1}) == 0.75
    assert set(DRIVERS) >= {"expsum", "projector", "strichartz", "count", "weyl_major", "weyl_minor"}


def test_minor_samples_are_minor():
    ts = minor_samples(0)
    assert len(ts) == 20
    for N in (64, 128, 256, 512, 1024, 4**10):
        assert all(not classify_arc(t, N).is_major for t in ts)


def test_outputs():
    rep = run_sweep(Sweep((4, 8, 16)), "count")
    buf = io.StringIO()
    write_gnuplot(rep, "count.summary.csv", buf)
    assert "count.summary.csv" in buf.getvalue() and "logscale" in buf.getvalue()
    buf = io.StringIO()
    write_manifest(rep, buf, {"N": "4:16"})
    doc = json.loads(buf.getvalue())
    assert doc["config"] == {"N": "4:16"} and doc["fit"]["slope"] == rep.fit.slope
