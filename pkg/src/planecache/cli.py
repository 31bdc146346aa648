"""Command-line front end.

    planecache analytic --k-range 1:20 --out costs.csv
    planecache simulate --k-range 1:10 --seed 7 --out sim.csv
    planecache miss --k-range 1:25 --seed 7
    planecache import-stations stations.csv --out normalized.csv
    planecache increments --k-range 2:3 --q 2 --n 100000 --seed 1

Every option may also come from a JSON ``--config`` file (keys are the long
option names with dashes replaced by underscores); command-line flags win.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import analytic
from .cost import CostSpec, MissSpec
from .finite_field import FieldError
from .geometry import GeometryError, load_stations, write_stations
from .montecarlo import STRATEGIES, SimPlan, run_increment_histogram, run_sweep

log = logging.getLogger("planecache")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3

DEFAULTS = {
    "lambda": analytic.REFERENCE_LAMBDA,
    "k_range": "1:20",
    "a": 2.0,
    "delta_max": 700.0,
    "r": 700.0,
    "q": 256,
    "n_process": 500,
    "n_alloc": 100,
    "seed": None,
    "stations": None,
    "out": None,
    "format": "csv",
    "gnuplot_ready": False,
    "workers": 1,
    "block_size": 25,
    "client_fraction": 0.5,
    "measure": "cost",
    "strategies": None,
    "epsilon": 1e-2,
    "n": 100_000,
    "projection": None,
    "ref_lat": None,
}

DEFAULT_STRATEGIES = {
    "analytic": "uncoded,coded",
    "simulate": "uncoded,coded",
    "miss": "uncoded,nearest",
    "increments": "uncoded,coded",
}


class UsageError(Exception):
    pass


def parse_k_range(text: str) -> list[int]:
    """``"5"``, ``"1:20"`` or ``"1:20:2"`` (inclusive end)."""
    try:
        parts = [int(p) for p in str(text).replace("..", ":").split(":")]
    except ValueError:
        raise UsageError(f"bad k range {text!r}") from None
    if len(parts) == 1:
        parts = [parts[0], parts[0], 1]
    elif len(parts) == 2:
        parts.append(1)
    if len(parts) != 3:
        raise UsageError(f"bad k range {text!r}")
    start, end, step = parts
    if start < 1 or step < 1 or end < start:
        raise UsageError(f"empty or invalid k range {text!r}")
    return list(range(start, end + 1, step))


def _common(p: argparse.ArgumentParser, sim: bool = False) -> None:
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--lambda", dest="lambda", type=float, help="cache intensity per m^2")
    p.add_argument("--k-range", help="part counts, start:end[:step]")
    p.add_argument("--a", type=float, help="cost exponent")
    p.add_argument("--delta-max", type=float, help="cost cap distance (m)")
    p.add_argument("--r", type=float, help="connection range (m)")
    p.add_argument("--q", type=int, help="field size for coding")
    p.add_argument("--strategies", help="comma-separated strategy list")
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--gnuplot-ready", action="store_true", default=None,
                   help="whitespace-separated columns with a '#' header")
    if sim:
        p.add_argument("--n-process", type=int, help="field/client replications")
        p.add_argument("--n-alloc", type=int, help="allocation replications per field")
        p.add_argument("--stations", help="station CSV (x_m,y_m or lat,lon)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--block-size", type=int, help="process replications per random stream")
        p.add_argument("--client-fraction", type=float,
                       help="side fraction of the centered client rectangle (stations only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planecache", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form costs and miss probabilities per k")
    _common(p)
    p.add_argument("--measure", choices=("cost", "miss"))
    p.add_argument("--epsilon", type=float, help="miss target for the max-parts summary")

    p = sub.add_parser("simulate", help="Monte Carlo capped cost per k and strategy")
    _common(p, sim=True)

    p = sub.add_parser("miss", help="Monte Carlo miss frequency per k and strategy")
    _common(p, sim=True)

    p = sub.add_parser("increments", help="contacted-rank gap histograms vs geometric laws")
    _common(p)
    p.add_argument("--n", type=int, help="samples per (strategy, k)")

    p = sub.add_parser("import-stations", help="normalize a station file to x_m,y_m")
    p.add_argument("input")
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--projection", choices=("none", "equirectangular"))
    p.add_argument("--ref-lat", type=float, help="reference latitude for the projection")
    p.add_argument("--out", help="normalized CSV (default stdout)")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config file over defaults."""
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
    opts = dict(DEFAULTS)
    opts.update(config)
    for key, value in vars(args).items():
        if value is not None:
            opts[key] = value
    if opts.get("strategies") is None:
        opts["strategies"] = DEFAULT_STRATEGIES.get(args.command, "")
    return opts


def _strategies(opts, allowed) -> list[str]:
    raw = opts["strategies"]
    names = [s.strip() for s in (raw.split(",") if isinstance(raw, str) else raw) if s.strip()]
    if not names:
        raise UsageError("nothing to compute: empty strategy list")
    for s in names:
        if s not in allowed:
            raise UsageError(f"unknown strategy {s!r}; choose from {', '.join(allowed)}")
    return names


def _params(opts, k=1) -> analytic.ModelParams:
    return analytic.ModelParams(lam=opts["lambda"], k=k, a=opts["a"], delta_max=opts["delta_max"],
                                r=opts["r"], q=opts["q"])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(columns: list[str], rows: list[list], fmt: str, gnuplot: bool) -> str:
    if gnuplot:
        lines = ["# " + " ".join(columns)]
        lines += [" ".join(_fmt(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps([dict(zip(columns, row)) for row in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")


def cmd_analytic(opts) -> tuple[list[str], list[list]]:
    ks = parse_k_range(opts["k_range"])
    strategies = _strategies(opts, ("uncoded", "coded"))
    if opts["measure"] == "cost":
        columns = ["k"]
        if "uncoded" in strategies:
            columns.append("W_p")
        if "coded" in strategies:
            columns += ["W_cmin", "W_cmin_plus_G0"]
        rows = []
        for k in ks:
            p = _params(opts, k)
            row = [k]
            if "uncoded" in strategies:
                row.append(analytic.w_uncoded(p))
            if "coded" in strategies:
                row += [analytic.w_coded_min(p), analytic.coded_cost_upper(p)]
            rows.append(row)
        return columns, rows
    columns = ["k"]
    if "uncoded" in strategies:
        columns.append("F_p")
    if "coded" in strategies:
        columns.append("F_cmin")
    rows = []
    for k in ks:
        p = _params(opts, k)
        row = [k]
        if "uncoded" in strategies:
            row.append(analytic.miss_uncoded(p))
        if "coded" in strategies:
            row.append(analytic.miss_coded_min(p))
        rows.append(row)
    eps = opts["epsilon"]
    for s in strategies:
        n = analytic.max_parts_for_miss(_params(opts), eps, s)
        print(f"max parts with {s} miss <= {eps:g}: {n}", file=sys.stderr)
    return columns, rows


def _plan(opts, measure) -> SimPlan:
    if opts["seed"] is None:
        raise UsageError("--seed is required for simulations")
    stations = load_stations(opts["stations"]) if opts["stations"] else None
    return SimPlan(
        measure=measure,
        lam=None if stations is not None else opts["lambda"],
        stations=stations,
        q=opts["q"],
        n_process=opts["n_process"],
        n_alloc=opts["n_alloc"],
        seed=opts["seed"],
        block_size=opts["block_size"],
        client_fraction=opts["client_fraction"],
        workers=opts["workers"],
    )


SIM_COLUMNS = ["k", "strategy", "source", "measure", "mean", "se", "n", "seed"]


def _simulate(opts, measure):
    ks = parse_k_range(opts["k_range"])
    strategies = _strategies(opts, STRATEGIES)
    plan = _plan(opts, measure)
    estimates = run_sweep(plan, ks, strategies)
    if estimates:
        log.info("simulation wall time %.2f s", estimates[0].wall_seconds)
    rows = [[e.k, e.strategy, e.source, e.measure, e.mean, e.se, e.n, e.seed] for e in estimates]
    return SIM_COLUMNS, rows


def cmd_simulate(opts):
    return _simulate(opts, CostSpec(opts["a"], opts["delta_max"]))


def cmd_miss(opts):
    return _simulate(opts, MissSpec(opts["r"]))


def cmd_increments(opts):
    if opts["seed"] is None:
        raise UsageError("--seed is required for simulations")
    ks = parse_k_range(opts["k_range"])
    if ks[0] < 2:
        raise UsageError("increments need k >= 2")
    strategies = _strategies(opts, ("uncoded", "coded"))
    columns = ["strategy", "k", "q", "step", "failure", "mean", "se", "chi2", "pvalue",
               "bin", "observed", "expected"]
    rows = []
    for s in strategies:
        q = opts["q"] if s == "coded" else None
        for k in ks:
            for step in run_increment_histogram(s, k, q, opts["n"], opts["seed"]):
                labels = [str(b) for b in step.bins] + [f">{step.bins[-1]}"]
                for lab, o, e in zip(labels, step.observed, step.expected):
                    rows.append([s, k, q if q else "NA", step.step, step.failure, step.mean,
                                 step.se, step.chi2, step.pvalue, lab, int(o), float(e)])
    return columns, rows


def cmd_import_stations(opts) -> str:
    field = load_stations(opts["input"], projection=opts["projection"], ref_lat=opts["ref_lat"])
    write_stations(field, opts["out"] or sys.stdout)
    lines = [f"count: {len(field)}"]
    if field.empty:
        lines.append("warning: station file holds no stations")
    else:
        reg = field.region
        lines.append(f"bbox: x {reg.x0!r}..{reg.x0 + reg.width!r} m, "
                     f"y {reg.y0!r}..{reg.y0 + reg.height!r} m")
        lines.append(f"size: {reg.width!r} x {reg.height!r} m")
        lines.append(f"density: {len(field) / reg.area!r} per m^2")
    summary = "\n".join(lines) + "\n"
    (sys.stdout if opts["out"] else sys.stderr).write(summary)
    return summary


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "miss": cmd_miss,
    "increments": cmd_increments,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        opts = resolve(args)
        if args.command == "import-stations":
            cmd_import_stations(opts)
            return EXIT_OK
        columns, rows = COMMANDS[args.command](opts)
        text = render(columns, rows, opts["format"], bool(opts["gnuplot_ready"]))
        emit(text, opts["out"])
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"planecache: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, FieldError, ValueError, OSError) as exc:
        print(f"planecache: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
