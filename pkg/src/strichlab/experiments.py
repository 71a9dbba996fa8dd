"""Log-log exponent fits and seeded sweep orchestration."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "FitResult",
    "fit_exponent",
    "Sweep",
    "PointResult",
    "SweepReport",
    "DRIVERS",
    "run_sweep",
    "theory_exponent",
    "dyadic_range",
    "write_rows_csv",
    "write_summary_csv",
    "write_manifest",
    "write_gnuplot",
]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_abs_residual: float
    points: tuple = field(default=())

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "max_abs_residual": self.max_abs_residual,
            "points": [list(p) for p in self.points],
        }


def fit_exponent(points: Sequence[tuple[float, float]], drop_smallest: int = 0) -> FitResult:
    """Least-squares fit of ``log value = slope * log N + intercept``."""
    pts = sorted((float(n), float(v)) for n, v in points)[drop_smallest:]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points to fit, got {len(pts)}")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise ValueError("fit needs positive N and values")
    x = np.array([math.log(n) for n, _ in pts])
    y = np.array([math.log(v) for _, v in pts])
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit: all N equal")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return FitResult(float(slope), float(intercept), float(np.max(np.abs(resid))),
                     tuple(zip(x.tolist(), y.tolist())))


def dyadic_range(spec: str) -> list[int]:
    """``"4:64"`` -> ``[4, 8, 16, 32, 64]``; a single integer gives one point."""
    parts = str(spec).split(":")
    if len(parts) == 1:
        return [int(parts[0])]
    if len(parts) != 2:
        raise ValueError(f"bad range {spec!r}")
    lo, hi = int(parts[0]), int(parts[1])
    if lo < 1 or hi < lo:
        raise ValueError(f"bad range {spec!r}")
    out = []
    n = lo
    while n <= hi:
        out.append(n)
        n *= 2
    return out


# ---------------------------------------------------------------- sweeps

def _primary(point) -> float:
    if isinstance(point, dict):
        return float(point["N"])
    if isinstance(point, (list, tuple)):
        return float(point[0])
    return float(point)


@dataclass(frozen=True)
class Sweep:
    schedule: tuple
    budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        sched = tuple(tuple(p) if isinstance(p, list) else p for p in self.schedule)
        object.__setattr__(self, "schedule", sched)
        prim = [_primary(p) for p in sched]
        if any(b <= a for a, b in zip(prim, prim[1:])):
            raise ValueError("schedule must be strictly increasing in its primary parameter")


@dataclass
class PointResult:
    index: int
    point: Any
    value: float | None
    status: str  # "ok" or "failed"
    error: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class SweepReport:
    driver: str
    params: dict
    seed: int
    budget: int | None
    points: list
    rows: list
    columns: tuple
    fit: FitResult | None
    theory: float | None

    @property
    def ok(self) -> list:
        return [p for p in self.points if p.status == "ok"]

    def summary(self) -> dict:
        return {
            "driver": self.driver,
            "params": self.params,
            "seed": self.seed,
            "budget": self.budget,
            "theory_exponent": self.theory,
            "fit": self.fit.as_dict() if self.fit else None,
            "points": [{"index": p.index, "point": _jsonable(p.point), "value": p.value,
                        "status": p.status, "error": p.error, **_jsonable(p.extra)} for p in self.points],
        }


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


# ---------------------------------------------------------------- drivers
# each driver maps (point, seed, budget, params) to (value, rows, extra)

def _drv_expsum(point, seed, budget, params):
    from .expsum import verify_i1

    N = int(point)
    rep = verify_i1(params["r0"], params["r1"], params["p"], [N], trials=params.get("trials", 4),
                    seed=seed, shifts=params.get("shifts", 20))
    return rep.max_ratio[N], rep.rows, {"spread": rep.spread[N]}


def _drv_expsum_slab(point, seed, budget, params):
    from .expsum import verify_i2

    N1, N2 = (int(v) for v in point)
    rep = verify_i2(params["r0"], params["r1"], params["p"], [(N1, N2)], trials=params.get("trials", 4),
                    seed=seed, shifts=params.get("shifts", 5))
    row = rep.rows[0]
    return row["ratio_i2"], [row], {"gain": row["gain"], "factor": row["factor"]}


def _drv_projector(point, seed, budget, params):
    from .packets import projector_experiment
    from .regularity import ManifoldSpec

    spec = ManifoldSpec.parse(params["spheres"], 0)
    n = int(point)
    scale = params.get("scale", 4)
    lams = [tuple(scale * n for _ in range(spec.r0)), tuple(n for _ in range(spec.r0))]
    lams += [tuple(0 for _ in range(spec.r0))] * (params.get("k", 1) - 1)
    rep = projector_experiment(spec, params.get("k", 1), [lams], params.get("kinds", "highest_weight"),
                               params.get("eta"))[0]
    return rep.lhs, [{"n": n, **_flat(rep.as_row())}], {"N2": rep.parameters["N"][1]}


def _drv_strichartz(point, seed, budget, params):
    from .packets import strichartz_experiment
    from .regularity import ManifoldSpec

    spec = ManifoldSpec.parse(params["spheres"], params.get("torus", 0))
    N2 = int(point)
    k = params.get("k", 1)
    N1 = params.get("scale", 4) * N2
    Ns = (N1,) + (N2,) * k
    reps = strichartz_experiment(spec, k, [Ns], trials=params.get("trials", 2), seed=seed,
                                 max_modes=params.get("max_modes", 12))
    rows = [_flat(r.as_row()) for r in reps]
    return max(r.parameters["normalized"] for r in reps), rows, {}


def _drv_count(point, seed, budget, params):
    from .lattice import DEFAULT_POINT_BUDGET, max_circle_count

    N = int(point)
    lo, hi = params.get("A_range") or (0, N ** 4)
    mode = "exhaustive" if params.get("exhaustive_b") else "origin"
    res = max_circle_count(N, (int(lo), int(hi)), mode, budget=budget or DEFAULT_POINT_BUDGET)
    return float(res.max_count), [{"N": N, "A_lo": lo, "A_hi": hi, "offsets": mode, "max_count": res.max_count,
                                   "arg": ";".join(map(str, res.arg)) if res.arg else ""}], {}


def _drv_weyl_major(point, seed, budget, params):
    from .expsum import major_arc_ratio

    N = int(point)
    samples = major_samples(N)
    shifts = params.get("b_samples") or list(range(10))
    val = major_arc_ratio(N, samples, shifts)
    return val, [{"N": N, "samples": len(samples), "shifts": len(shifts), "ratio": val}], {}


def _drv_weyl_minor(point, seed, budget, params):
    from .expsum import minor_arc_ratio

    N = int(point)
    ts = params.get("t_samples") or minor_samples(seed)
    shifts = params.get("b_samples") or [0]
    val = minor_arc_ratio(N, ts, shifts)
    return val, [{"N": N, "samples": len(ts), "ratio": val}], {}


def major_samples(N: int) -> list:
    """``(a, q, offset)`` on major arcs: small denominators, offsets ``c/(qN)`` and ``c N^{-2}``."""
    out = []
    for a, q in ((1, 1), (1, 2), (1, 3), (2, 5), (3, 7)):
        if q >= N:
            continue
        for c in (0, 0.25, 0.5, 0.9):
            out.append((a, q, Fraction(c).limit_denominator(100) / (q * N)))
        for c in (1, 4):
            off = Fraction(c, N * N)
            if off < Fraction(1, q * N):
                out.append((a, q, off))
    return out


def minor_samples(seed: int = 0, count: int = 20) -> list:
    """Golden ratio plus seeded ``t``, all minor for every ``64 <= N < 5^10``.

    In that range major arcs have ``q <= 4`` and width below ``10^{-3}``.
    """
    rng = np.random.default_rng([seed, 20])
    out = [Fraction((math.sqrt(5) - 1) / 2)]
    while len(out) < count:
        t = Fraction(float(rng.random()))
        if all(abs(t - Fraction(a, q)) > Fraction(1, 1000) for q in range(1, 5) for a in range(0, q + 1)):
            out.append(t)
    return out


def _flat(row: dict) -> dict:
    return {k: (";".join(map(str, v)) if isinstance(v, (list, tuple)) else v) for k, v in _jsonable(row).items()}


DRIVERS: dict[str, Callable] = {
    "expsum": _drv_expsum,
    "expsum_slab": _drv_expsum_slab,
    "projector": _drv_projector,
    "strichartz": _drv_strichartz,
    "count": _drv_count,
    "weyl_major": _drv_weyl_major,
    "weyl_minor": _drv_weyl_minor,
}


def theory_exponent(driver: str, params: dict) -> float | None:
    """Exponent the fitted slope is compared against, from the calculators where one exists."""
    from .regularity import ManifoldSpec, mljspe_constant, mls_constant

    if driver == "expsum":
        r = params["r0"] + params["r1"]
        return r / 2 - (params["r1"] + 2) / params["p"]
    if driver == "expsum_slab":
        return None
    if driver == "projector":
        spec = ManifoldSpec.parse(params["spheres"], 0)
        return float(mljspe_constant(spec, params.get("k", 1), params.get("eta")).exponent(2, eta=params.get("eta")))
    if driver == "strichartz":
        spec = ManifoldSpec.parse(params["spheres"], params.get("torus", 0))
        c = mls_constant(spec, params.get("k", 1), delta=0, eps=0, eta=0)
        return float(c.exponent(2))
    if driver in ("count", "weyl_major", "weyl_minor"):
        return 0.0
    return None


def _run_point(args):
    driver, index, point, seed, budget, params = args
    try:
        value, rows, extra = DRIVERS[driver](point, seed, budget, params)
        return PointResult(index, point, float(value), "ok", "", extra), rows
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        return PointResult(index, point, None, "failed", f"{type(exc).__name__}: {exc}"), []


def run_sweep(s: Sweep, driver: str, params: dict | None = None, workers: int = 1,
              sink: Callable[[SweepReport], None] | None = None) -> SweepReport:
    """Run every schedule point, keep failures as flagged points, fit when three or more succeed."""
    if driver not in DRIVERS:
        raise ValueError(f"unknown driver {driver!r}; choose from {sorted(DRIVERS)}")
    params = dict(params or {})
    jobs = [(driver, i, p, s.seed, s.budget, params) for i, p in enumerate(s.schedule)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    results.sort(key=lambda r: r[0].index)
    points = [r[0] for r in results]
    rows = [row for _, rs in results for row in rs]
    columns = tuple(rows[0]) if rows else ()
    good = [(_fit_abscissa(p), p.value) for p in points if p.status == "ok" and p.value and p.value > 0]
    fit = fit_exponent(good) if len(good) >= 3 and len({n for n, _ in good}) > 1 else None
    rep = SweepReport(driver, params, s.seed, s.budget, points, rows, columns, fit, theory_exponent(driver, params))
    if sink is not None:
        sink(rep)
    return rep


def _fit_abscissa(p: PointResult) -> float:
    if "N2" in p.extra:
        return float(p.extra["N2"])
    if isinstance(p.point, (list, tuple)):
        return float(p.point[-1])
    return float(p.point)


# ---------------------------------------------------------------- outputs

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows_csv(report: SweepReport, fh) -> None:
    cols = list(report.columns)
    for row in report.rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    for row in report.rows:
        w.writerow([_fmt(row.get(c, "")) for c in cols])


def write_summary_csv(report: SweepReport, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "point", "value", "status", "error"])
    for p in report.points:
        point = ";".join(map(str, p.point)) if isinstance(p.point, (list, tuple)) else str(p.point)
        w.writerow([p.index, point, "" if p.value is None else repr(p.value), p.status, p.error])


def write_manifest(report: SweepReport, fh, config: dict | None = None) -> None:
    doc = report.summary()
    if config is not None:
        doc["config"] = _jsonable(config)
    json.dump(doc, fh, indent=2, sort_keys=True)
    fh.write("\n")


def write_gnuplot(report: SweepReport, csv_name: str, fh, title: str = "", skip: int = 1) -> None:
    """Log-log plot of the per-point summary CSV with the fitted line.

    ``skip`` is the number of leading lines (header and comments) in the CSV.
    """
    fh.write(f"set title {json.dumps(title or report.driver)}\n")
    fh.write("set logscale xy\nset datafile separator ','\nset key top left\n")
    fh.write("set xlabel 'N'\nset ylabel 'value'\n")
    if report.fit:
        fh.write(f"f(x) = exp({report.fit.intercept!r}) * x**{report.fit.slope!r}\n")
        fh.write(f"plot '{csv_name}' using 2:3 skip {skip} with points title 'measured', "
                 f"f(x) title 'fit slope {report.fit.slope:.3f}'\n")
    else:
        fh.write(f"plot '{csv_name}' using 2:3 skip {skip} with points title 'measured'\n")
