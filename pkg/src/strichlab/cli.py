"""Command-line front end: one subcommand per experiment or calculator.

Exit codes: 0 when the verdict passes, 1 when a violation is measured,
2 for configuration or budget errors. Outputs are written only after every
point has been computed, so an error never leaves partial files behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from . import __version__

EXIT_PASS, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# Defaults per command. Tolerances follow the acceptance runs and can be
# overridden from the command line or a config block.
DEFAULTS: dict[str, dict] = {
    "thresholds": {"spheres": "", "torus": 0, "k": "1"},
    "expsum": {"r": 2, "r1": 0, "p": 4.0, "N": "4:64", "trials": 4, "shifts": 20, "slab": False,
               "slope_tol": 0.15},
    "projector": {"spheres": "2,2", "k": 1, "N": "4:32", "kinds": "highest_weight", "scale": 4,
                  "eta": None, "slope_tol": 0.15},
    "strichartz": {"spheres": "2", "torus": 1, "k": 1, "N": "4:16", "scale": 4, "trials": 2,
                   "max_modes": 12, "slope_tol": 0.15},
    "count": {"N": "8:128", "A": None, "exhaustive_b": False, "max_count": 2, "slope_tol": 0.25},
    "weyl": {"arc": "major", "N": "64:1024", "shifts": 10, "growth": 1.5, "slope_tol": 0.1,
             "r": 1, "delta": 0.5},
    "fit": {"input": None, "x": "N", "y": "value", "drop": 0, "expect": None, "slope_tol": 0.15},
}
COMMON = {"seed": 0, "budget": None, "out": None, "format": "csv", "gnuplot": False, "dry_run": False,
          "workers": 1}

EPILOGS = {
    "thresholds": "columns: r2,r3,r,k,regime,s_c,relation,s_bound,source,rule",
    "expsum": "row columns: N,p,r0,r1,family,shift,ratio (with --slab: N1,N2,M,slab_size,shift,"
              "shift_moved,ratio_i2,ratio_i1,factor,gain); verdict: slope <= r/2-(r1+2)/p + tol",
    "projector": "row columns: n,lhs,rhs_constant,ratio,parameters; verdict: |slope - theory| <= tol",
    "strichartz": "row columns: lhs,rhs_constant,ratio,normalized and the sampled parameters; "
                  "verdict: slope <= theory + tol",
    "count": "row columns: N,A_lo,A_hi,offsets,max_count,arg; verdict: max <= --max-count when --A "
             "is given, otherwise slope <= tol",
    "weyl": "row columns: N,samples,shifts,ratio (major/minor) or N,measure,bound,ratio (level); "
            "verdict: major |slope| <= tol, minor values <= growth x first value, level slope <= tol",
    "fit": "reads a CSV (lines starting with # are skipped) and fits log y against log x",
}


# ---------------------------------------------------------------- parsing

def _k_range(text: str) -> list[int]:
    parts = str(text).split(":")
    if len(parts) > 2:
        raise ConfigError(f"bad k range {text!r}")
    lo, hi = int(parts[0]), int(parts[-1])
    if lo < 1 or hi < lo:
        raise ConfigError(f"bad k range {text!r}")
    return list(range(lo, hi + 1))


def _int_range(text: str) -> tuple[int, int]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"A range must look like LO:HI, got {text!r}")
    return int(parts[0]), int(parts[1])


def _add_common(sp: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    sp.add_argument("--config", default=S, help="JSON file with one flat block per command")
    sp.add_argument("--seed", type=int, default=S)
    sp.add_argument("--budget", type=int, default=S, help="point/node cap handed to the drivers")
    sp.add_argument("--out", default=S, help="output directory (nothing is written without it)")
    sp.add_argument("--format", choices=("csv", "json"), default=S)
    sp.add_argument("--gnuplot", action="store_true", default=S)
    sp.add_argument("--dry-run", dest="dry_run", action="store_true", default=S)
    sp.add_argument("--workers", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    ap = argparse.ArgumentParser(prog="strichlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"strichlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, helptext):
        sp = sub.add_parser(name, help=helptext, epilog=EPILOGS[name])
        _add_common(sp)
        return sp

    sp = cmd("thresholds", "well-posedness threshold rows for a product manifold")
    sp.add_argument("--spheres", default=S, help="comma list of sphere dimensions")
    sp.add_argument("--torus", type=int, default=S)
    sp.add_argument("--k", default=S, help="nonlinearity degree or range LO:HI")

    sp = cmd("expsum", "exponential sum L^p ratios over shifted cubes")
    sp.add_argument("--r", type=int, default=S, help="number of sphere-type coordinates")
    sp.add_argument("--r1", type=int, default=S, help="number of torus coordinates")
    sp.add_argument("--p", type=float, default=S)
    sp.add_argument("--N", default=S, help="dyadic range LO:HI")
    sp.add_argument("--trials", type=int, default=S)
    sp.add_argument("--shifts", type=int, default=S)
    sp.add_argument("--slab", action="store_true", default=S, help="restrict to slabs with N1 = N^2")
    sp.add_argument("--slope-tol", dest="slope_tol", type=float, default=S)

    sp = cmd("projector", "joint spectral projector growth for highest-weight or zonal witnesses")
    sp.add_argument("--spheres", default=S)
    sp.add_argument("--k", type=int, default=S)
    sp.add_argument("--N", default=S, help="dyadic range of n, with lambda2 = (n,..), lambda1 = scale*lambda2")
    sp.add_argument("--kinds", choices=("highest_weight", "zonal"), default=S)
    sp.add_argument("--scale", type=int, default=S)
    sp.add_argument("--eta", type=float, default=S)
    sp.add_argument("--slope-tol", dest="slope_tol", type=float, default=S)

    sp = cmd("strichartz", "multilinear Strichartz ratios for random packets")
    sp.add_argument("--spheres", default=S)
    sp.add_argument("--torus", type=int, default=S)
    sp.add_argument("--k", type=int, default=S)
    sp.add_argument("--N", default=S, help="dyadic range of N2, with N1 = scale*N2")
    sp.add_argument("--scale", type=int, default=S)
    sp.add_argument("--trials", type=int, default=S)
    sp.add_argument("--max-modes", dest="max_modes", type=int, default=S)
    sp.add_argument("--slope-tol", dest="slope_tol", type=float, default=S)

    sp = cmd("count", "lattice points of a circle inside a box")
    sp.add_argument("--N", default=S, help="dyadic range of box sides")
    sp.add_argument("--A", default=S, help="radius-squared range LO:HI (default 0:N^4)")
    sp.add_argument("--exhaustive-b", dest="exhaustive_b", action="store_true", default=S)
    sp.add_argument("--max-count", dest="max_count", type=int, default=S)
    sp.add_argument("--slope-tol", dest="slope_tol", type=float, default=S)

    sp = cmd("weyl", "Weyl sums on major and minor arcs and level-set measures")
    sp.add_argument("--arc", choices=("major", "minor", "level"), default=S)
    sp.add_argument("--N", default=S)
    sp.add_argument("--shifts", type=int, default=S)
    sp.add_argument("--growth", type=float, default=S)
    sp.add_argument("--r", type=int, default=S, help="dimension for --arc level")
    sp.add_argument("--delta", type=float, default=S, help="threshold for --arc level")
    sp.add_argument("--slope-tol", dest="slope_tol", type=float, default=S)

    sp = cmd("fit", "log-log slope of a CSV column against another")
    sp.add_argument("--input", default=S)
    sp.add_argument("--x", default=S)
    sp.add_argument("--y", default=S)
    sp.add_argument("--drop", type=int, default=S)
    sp.add_argument("--expect", type=float, default=S)
    sp.add_argument("--slope-tol", dest="slope_tol", type=float, default=S)
    return ap


def _action_types(ap: argparse.ArgumentParser, command: str) -> dict:
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    out = {}
    for a in sub.choices[command]._actions:
        if a.dest in ("help", "config"):
            continue
        out[a.dest] = "flag" if isinstance(a, argparse._StoreTrueAction) else (a.type, a.choices)
    return out


def resolve_config(ap: argparse.ArgumentParser, ns: argparse.Namespace) -> dict:
    """Defaults, then the command's config block, then explicit flags."""
    command = ns.command
    cfg = {**COMMON, **DEFAULTS[command]}
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    path = getattr(ns, "config", None)
    if path:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object of command blocks")
        block = doc.get(command, {})
        if not isinstance(block, dict):
            raise ConfigError(f"config block {command!r} must be an object")
        types = _action_types(ap, command)
        for key, val in block.items():
            dest = key.replace("-", "_")
            if dest not in types:
                raise ConfigError(f"unknown key {key!r} in config block {command!r}")
            kind = types[dest]
            if kind == "flag":
                if not isinstance(val, bool):
                    raise ConfigError(f"{key!r} must be true or false")
            elif val is not None:
                conv, choices = kind
                try:
                    val = conv(val) if conv else str(val)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {key!r}: {val!r}") from exc
                if choices and val not in choices:
                    raise ConfigError(f"{key!r} must be one of {list(choices)}")
            cfg[dest] = val
    cfg.update(given)
    cfg["command"] = command
    return cfg


# ---------------------------------------------------------------- commands

def _thresholds(cfg: dict):
    from .regularity import ManifoldSpec, critical_regularity, threshold_rows

    try:
        spec = ManifoldSpec.parse(cfg["spheres"] or None, int(cfg["torus"]))
        ks = _k_range(cfg["k"])
        rows = threshold_rows(spec, ks)
    except (ValueError, AssertionError) as exc:
        raise ConfigError(f"unsupported manifold: {exc}") from exc
    out = []
    for row in rows:
        out.append({"manifold": str(spec), "r2": row["r2"], "r3": row["r3"], "r": row["r"], "k": row["k"],
                    "regime": row["regime"], "s_c": str(critical_regularity(spec, row["k"])),
                    "relation": ">" if row["strict"] else ">=", "s_bound": row["s_bound"],
                    "source": row["source"], "rule": row["rule"]})
    return out


def _schedule(cfg: dict):
    from .experiments import dyadic_range

    try:
        Ns = dyadic_range(cfg["N"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["command"] == "expsum" and cfg["slab"]:
        return [(n * n, n) for n in Ns]
    return Ns


def _driver(cfg: dict) -> tuple[str, dict]:
    c = cfg["command"]
    if c == "expsum":
        name = "expsum_slab" if cfg["slab"] else "expsum"
        return name, {"r0": cfg["r"], "r1": cfg["r1"], "p": cfg["p"], "trials": cfg["trials"],
                      "shifts": cfg["shifts"] if not cfg["slab"] else min(cfg["shifts"], 5)}
    if c == "projector":
        return "projector", {"spheres": cfg["spheres"], "k": cfg["k"], "kinds": cfg["kinds"],
                             "scale": cfg["scale"], "eta": cfg["eta"]}
    if c == "strichartz":
        return "strichartz", {"spheres": cfg["spheres"], "torus": cfg["torus"], "k": cfg["k"],
                              "scale": cfg["scale"], "trials": cfg["trials"], "max_modes": cfg["max_modes"]}
    if c == "count":
        params = {"exhaustive_b": bool(cfg["exhaustive_b"])}
        if cfg["A"] is not None:
            params["A_range"] = _int_range(cfg["A"])
        return "count", params
    if c == "weyl":
        if cfg["arc"] == "major":
            return "weyl_major", {"b_samples": list(range(cfg["shifts"]))}
        return "weyl_minor", {}
    raise ConfigError(f"no driver for {c!r}")


def _validate(cfg: dict) -> None:
    from .regularity import ManifoldSpec

    c = cfg["command"]
    if cfg["workers"] < 1:
        raise ConfigError("--workers must be >= 1")
    if cfg["budget"] is not None and cfg["budget"] < 1:
        raise ConfigError("--budget must be positive")
    if c in ("projector", "strichartz"):
        try:
            spec = ManifoldSpec.parse(cfg["spheres"] or None, cfg.get("torus", 0))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if spec.r0 == 0:
            raise ConfigError("need at least one sphere factor")
    if c == "expsum":
        if cfg["r"] < 0 or cfg["r1"] < 0 or cfg["r"] + cfg["r1"] < 1:
            raise ConfigError("need r, r1 >= 0 and r + r1 >= 1")
        if cfg["p"] < 2:
            raise ConfigError("p must be >= 2")
    if c == "weyl" and not 0 < cfg["delta"] < 1:
        raise ConfigError("--delta must lie in (0, 1)")


def _level_sweep(cfg: dict, Ns):
    """Level-set measure of the normalized constant sum, as a report-like object."""
    from .experiments import PointResult, SweepReport, fit_exponent
    from .expsum import CoefficientVector, level_set_measure
    from .lattice import Cube, enumerate_cube

    r = int(cfg["r"])
    points, rows = [], []
    for i, N in enumerate(Ns):
        try:
            pts = enumerate_cube(Cube(tuple([0] * r), N), r)
            a = CoefficientVector(pts, [1.0] * len(pts)).normalized()
            rep = level_set_measure(a, cfg["delta"], N)
            rows.append({"N": N, "measure": rep.measure, "bound": rep.bound, "ratio": rep.ratio})
            points.append(PointResult(i, N, rep.ratio, "ok"))
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            points.append(PointResult(i, N, None, "failed", f"{type(exc).__name__}: {exc}"))
    good = [(p.point, p.value) for p in points if p.status == "ok" and p.value > 0]
    fit = fit_exponent(good) if len(good) >= 3 else None
    return SweepReport("weyl_level", {"r": r, "delta": cfg["delta"]}, cfg["seed"], cfg["budget"], points,
                       rows, ("N", "measure", "bound", "ratio"), fit, 0.0)


def _verdict(cfg: dict, report) -> tuple[bool, str]:
    c = cfg["command"]
    tol = cfg["slope_tol"]
    fit = report.fit
    values = [p.value for p in report.points]
    if c == "count" and cfg["A"] is not None:
        top = max(values, default=0)
        return top <= cfg["max_count"], f"max_count={top:g} limit={cfg['max_count']}"
    if c == "weyl" and cfg["arc"] == "minor":
        if not values:
            return True, "no points"
        first = values[0]
        worst = max(values[1:], default=first)
        return worst <= cfg["growth"] * first, f"first={first:.4g} worst_later={worst:.4g} growth={cfg['growth']}"
    if fit is None:
        return True, "fewer than 3 points, no fit"
    theory = report.theory
    s = fit.slope
    if c == "projector" or (c == "weyl" and cfg["arc"] == "major"):
        ok = abs(s - theory) <= tol
        return ok, f"slope={s:.4f} theory={theory:.4f} tol=+-{tol}"
    if theory is None:
        from .experiments import theory_exponent

        theory = theory_exponent("expsum", {"r0": cfg["r"], "r1": cfg["r1"], "p": cfg["p"]})
    ok = s <= theory + tol
    return ok, f"slope={s:.4f} theory={theory:.4f} tol=+{tol}"


def _fit_csv(cfg: dict):
    from .experiments import fit_exponent

    if not cfg["input"]:
        raise ConfigError("fit needs --input")
    try:
        with open(cfg["input"], newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg['input']}: {exc}") from exc
    reader = csv.DictReader(lines)
    if not reader.fieldnames or cfg["x"] not in reader.fieldnames or cfg["y"] not in reader.fieldnames:
        raise ConfigError(f"columns {cfg['x']!r} and {cfg['y']!r} must be present")
    pts = []
    for row in reader:
        if row[cfg["x"]] in ("", None) or row[cfg["y"]] in ("", None):
            continue
        pts.append((float(row[cfg["x"]]), float(row[cfg["y"]])))
    try:
        return fit_exponent(pts, drop_smallest=cfg["drop"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- output

def _table_text(rows: list[dict], fmt: str, comment: str | None = None) -> str:
    buf = io.StringIO()
    if fmt == "json":
        json.dump(rows, buf, indent=2, sort_keys=True)
        buf.write("\n")
        return buf.getvalue()
    if comment:
        buf.write(f"# {comment}\n")
    cols: list[str] = []
    for row in rows:
        cols += [k for k in row if k not in cols]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else ("" if v is None else v) for v in
                    (row.get(c) for c in cols)])
    return buf.getvalue()


def _commit(out: str, files: dict[str, str]) -> list[str]:
    """Write every file into a scratch directory, then move them into place."""
    os.makedirs(out, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".strichlab-", dir=out)
    try:
        for name, text in files.items():
            with open(os.path.join(tmp, name), "w", newline="") as fh:
                fh.write(text)
        for name in files:
            os.replace(os.path.join(tmp, name), os.path.join(out, name))
    finally:
        for name in os.listdir(tmp):
            os.remove(os.path.join(tmp, name))
        os.rmdir(tmp)
    return [os.path.join(out, n) for n in files]


def _provenance(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in ("out", "dry_run")}


def _report_files(cfg: dict, report) -> dict[str, str]:
    from .experiments import write_gnuplot, write_manifest, write_summary_csv

    c = cfg["command"]
    prov = json.dumps(_provenance(cfg), sort_keys=True)
    files = {}
    ext = "json" if cfg["format"] == "json" else "csv"
    files[f"{c}.rows.{ext}"] = _table_text(report.rows, cfg["format"], f"config {prov}")
    buf = io.StringIO()
    buf.write(f"# config {prov}\n")
    write_summary_csv(report, buf)
    files[f"{c}.summary.csv"] = buf.getvalue()
    buf = io.StringIO()
    write_manifest(report, buf, _provenance(cfg))
    files[f"{c}.manifest.json"] = buf.getvalue()
    if cfg["gnuplot"]:
        buf = io.StringIO()
        buf.write(f"# config {prov}\n")
        write_gnuplot(report, f"{c}.summary.csv", buf, title=c, skip=2)
        files[f"{c}.gp"] = buf.getvalue()
    return files


def _emit(cfg: dict, files: dict[str, str], stdout_text: str) -> None:
    if cfg["out"]:
        for path in _commit(cfg["out"], files):
            print(f"wrote {path}")
    else:
        sys.stdout.write(stdout_text)


def _run(cfg: dict) -> int:
    from .experiments import Sweep, run_sweep

    c = cfg["command"]
    if c == "thresholds":
        rows = _thresholds(cfg)
        if cfg["dry_run"]:
            print(f"dry run: {len(rows)} threshold rows for {rows[0]['manifold'] if rows else '-'}")
            return EXIT_PASS
        prov = json.dumps(_provenance(cfg), sort_keys=True)
        text = _table_text(rows, cfg["format"], f"config {prov}")
        ext = "json" if cfg["format"] == "json" else "csv"
        _emit(cfg, {f"thresholds.{ext}": text}, text)
        print(f"PASS thresholds: {len(rows)} rows")
        return EXIT_PASS

    if c == "fit":
        fit = _fit_csv(cfg)
        row = fit.as_dict()
        text = _table_text([row], cfg["format"])
        ok, msg = True, f"slope={fit.slope:.4f}"
        if cfg["expect"] is not None:
            ok = abs(fit.slope - cfg["expect"]) <= cfg["slope_tol"]
            msg += f" expect={cfg['expect']} tol=+-{cfg['slope_tol']}"
        if not cfg["dry_run"]:
            _emit(cfg, {f"fit.{'json' if cfg['format'] == 'json' else 'csv'}": text}, text)
        print(f"{'PASS' if ok else 'FAIL'} fit: {msg}")
        return EXIT_PASS if ok else EXIT_VIOLATION

    _validate(cfg)
    sched = _schedule(cfg)
    try:
        sweep = Sweep(tuple(sched), cfg["budget"], cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["dry_run"]:
        work = _work_estimate(cfg, sched)
        print(f"dry run: {c} schedule={list(sched)} budget={cfg['budget']} seed={cfg['seed']} "
              f"estimated_evaluations={work}")
        return EXIT_PASS
    if c == "weyl" and cfg["arc"] == "level":
        report = _level_sweep(cfg, sched)
    else:
        name, params = _driver(cfg)
        report = run_sweep(sweep, name, params, workers=cfg["workers"])
    failed = [p for p in report.points if p.status != "ok"]
    if failed:
        for p in failed:
            print(f"point {p.point}: {p.error}", file=sys.stderr)
        raise ConfigError(f"{len(failed)} of {len(report.points)} points failed; nothing written")
    ok, msg = _verdict(cfg, report)
    files = _report_files(cfg, report)
    buf = io.StringIO()
    buf.write(files[f"{c}.summary.csv"])
    if report.fit:
        buf.write(f"# fit slope={report.fit.slope!r} intercept={report.fit.intercept!r} "
                  f"max_abs_residual={report.fit.max_abs_residual!r}\n")
    _emit(cfg, files, buf.getvalue() if cfg["format"] == "csv" else files[f"{c}.manifest.json"])
    print(f"{'PASS' if ok else 'FAIL'} {c}: {msg}")
    return EXIT_PASS if ok else EXIT_VIOLATION


def _work_estimate(cfg: dict, sched) -> int:
    """Rough number of basic evaluations, for --dry-run only."""
    c = cfg["command"]
    total = 0
    for pt in sched:
        n = pt[0] if isinstance(pt, tuple) else pt
        if c == "expsum":
            r = cfg["r"] + cfg["r1"]
            total += (n + 1) ** r * cfg["trials"] * cfg["shifts"] * len(("c", "s", "g", "slab"))
        elif c == "count":
            lo, hi = _int_range(cfg["A"]) if cfg["A"] is not None else (0, n ** 4)
            total += (hi - lo + 1) * (n + 1) ** 2 if cfg["exhaustive_b"] else (n + 1) ** 2
        elif c == "weyl":
            total += 3 * n * max(cfg["shifts"], 1)
        else:
            total += int(math.prod([cfg["scale"] * n, n]))
    return total


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ap, ns)
        return _run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
