"""Command-line front end.

Exit status: 0 on success, 1 on user error, 2 when an enumeration budget
would be exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import (
    DEFAULT_BUDGET,
    basin_fraction,
    count_local_peaks,
    distance_profile,
    enumerate_landscape,
    fitness_histogram,
    mean_walk_autocorrelation,
)
from .errors import (
    BudgetExceededError,
    InvalidInputError,
    LandscapeError,
    MinimumUnknownError,
    UndefinedStatisticError,
    UnsupportedModelError,
)
from .experiments import EXPERIMENTS, ExperimentSpec, run_experiment
from .model import (
    Alphabet,
    InteractionModel,
    build_type1,
    build_type1_proportion,
    build_type2,
    build_type3,
    from_document,
    max_location,
    max_value,
    min_location,
    min_value,
    serialize,
)
from .nk import NKLandscape, generate_nk, nk_from_document, serialize_nk
from .rng import substream
from .search import GAConfig, ga_sweep
from .walsh import (
    WalshPolynomial,
    evaluate_walsh_all,
    from_walsh,
    serialize_walsh,
    tabulate_binary,
    to_walsh,
    walsh_from_document,
)

EXIT_OK, EXIT_USER, EXIT_BUDGET = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _alphabet(text: str) -> Alphabet:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected a,b,arity (arity may be 'real')")
    try:
        arity = None if parts[2] == "real" else int(parts[2])
        return Alphabet(float(parts[0]), float(parts[1]), arity)
    except (ValueError, LandscapeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def load_document(path: str):
    """Read a landscape file: interaction model, NK landscape or Walsh polynomial."""
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{path} does not hold a JSON object")
    kind = doc.get("kind")
    if kind == "NK":
        return nk_from_document(doc)
    if kind == "Walsh":
        return walsh_from_document(doc)
    return from_document(doc)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    alpha = args.alphabet or Alphabet(1.0, 1.0, 2)
    dist = "uniform" if args.uniform else "exp-normal"
    if args.proportion is not None:
        if args.type != 1:
            raise UsageError("--proportion only applies to --type 1")
        model = build_type1_proportion(args.n, args.proportion, args.sigma, args.seed,
                                       alphabet=alpha, constant=args.constant, distribution=dist)
    else:
        M = args.n if args.m_order is None else args.m_order
        if args.type == 1:
            model = build_type1(args.n, M, args.sigma, args.seed, alphabet=alpha,
                                constant=args.constant, distribution=dist)
        elif args.type == 2:
            if args.alphabet and (alpha.a != 1.0 or alpha.b != 1.0):
                raise UsageError("Type II landscapes use the range [-1, 1]; only the arity may change")
            model = build_type2(args.n, M, args.sigma, args.seed, arity=alpha.arity,
                                constant=args.constant, distribution=dist)
        else:
            if args.constant:
                raise UsageError("Type III landscapes have no constant term")
            model = build_type3(args.n, M, args.sigma, args.seed, alphabet=alpha, distribution=dist)
    _emit(serialize(model), args.output)
    return EXIT_OK


def _fmt_point(x) -> str:
    return "[" + ",".join(f"{v:g}" for v in x) + "]"


def _extremes(model: InteractionModel) -> list[str]:
    lines = [f"f_max = {max_value(model)!r}", f"argmax = {_fmt_point(max_location(model))}"]
    try:
        lines += [f"f_min = {min_value(model)!r}", f"argmin = {_fmt_point(min_location(model))}"]
    except MinimumUnknownError:
        lines.append("f_min = unknown")
    return lines


STATS_COLUMNS = ("kind", "n", "m", "max_order", "sigma", "seed", "peak_count", "lag1_autocorr",
                 "basin_fraction")


def _write_stats_row(path: str, src, stats: dict):
    if isinstance(src, InteractionModel):
        ident = dict(kind=src.kind.value, m=src.m, max_order=src.max_order, sigma=src.sigma, seed=src.seed)
    else:
        ident = dict(kind="NK", m="", max_order=src.k + 1, sigma="", seed=src.seed)
    row = {**ident, "n": src.n, **stats}
    new = not Path(path).exists()
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, STATS_COLUMNS, restval="", lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow({k: "" if row.get(k) is None else row.get(k, "") for k in STATS_COLUMNS})


def cmd_analyze(args) -> int:
    src = load_document(args.file)
    if isinstance(src, WalshPolynomial):
        src = from_walsh(src)
    wanted = {k for k in ("peaks", "autocorr", "basin", "histogram", "extremes") if getattr(args, k)}
    if args.profile:
        wanted.add("profile")
    if args.csv:
        wanted |= {"peaks", "autocorr", "basin"}
    if not wanted:
        wanted = {"peaks", "autocorr", "basin"}
        if isinstance(src, InteractionModel) and src.kind.is_nm:
            wanted.add("extremes")
    lines = [f"n = {src.n}"]
    stats = {}
    if isinstance(src, InteractionModel):
        lines += [f"kind = {src.kind.value}", f"m = {src.m}", f"max_order = {src.max_order}"]
    else:
        lines.append(f"k = {src.k}")
    if "extremes" in wanted:
        if not isinstance(src, InteractionModel):
            raise UnsupportedModelError("extremes are only known for interaction models")
        lines += _extremes(src)
    if wanted - {"extremes"}:
        el = enumerate_landscape(src, args.budget)
        if "peaks" in wanted:
            stats["peak_count"] = count_local_peaks(el, args.plateaus)
            lines.append(f"peak_count = {stats['peak_count']}")
        if "autocorr" in wanted:
            try:
                ac = mean_walk_autocorrelation(el, substream(args.seed, 0), args.walks, args.steps)
                stats["lag1_autocorr"] = ac
                lines.append(f"lag1_autocorr = {ac!r}")
            except UndefinedStatisticError as exc:
                lines.append(f"lag1_autocorr = undefined ({exc})")
        if "basin" in wanted:
            try:
                stats["basin_fraction"] = basin_fraction(el, args.weighting, args.plateaus)
                lines.append(f"basin_fraction = {stats['basin_fraction']!r}")
            except UnsupportedModelError as exc:
                lines.append(f"basin_fraction = undefined ({exc})")
        if "histogram" in wanted:
            h = fitness_histogram(el, args.bins)
            lines += [f"bin {lo!r} {hi!r} {c}" for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts)]
        if "profile" in wanted:
            p = distance_profile(el)
            with open(args.profile, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("index", "distance", "fitness", "is_peak"))
                w.writerows(zip(p.index.tolist(), p.distance.tolist(), p.fitness.tolist(),
                                p.is_peak.astype(int).tolist()))
            lines.append(f"profile written to {args.profile}")
    if args.csv:
        _write_stats_row(args.csv, src, stats)
    print("\n".join(lines))
    return EXIT_OK


def cmd_nk(args) -> int:
    L = generate_nk(args.n, args.k, args.seed)
    if args.output or not args.analyze:
        _emit(serialize_nk(L), args.output)
    if args.analyze:
        el = enumerate_landscape(L, args.budget)
        ac = mean_walk_autocorrelation(el, substream(args.seed, 0), args.walks, args.steps)
        print(f"peak_count = {count_local_peaks(el)}")
        print(f"lag1_autocorr = {ac!r}")
        print(f"basin_fraction = {basin_fraction(el)!r}")
    return EXIT_OK


def cmd_ga(args) -> int:
    config = GAConfig.from_file(args.config) if args.config else GAConfig()
    if args.runs is not None:
        config = GAConfig(**{**config.__dict__, "runs": args.runs})
    models = []
    for path in args.files:
        src = load_document(path)
        if not isinstance(src, InteractionModel):
            raise UnsupportedModelError(f"{path}: the GA runs on interaction models only")
        models.append(src)
    summaries = ga_sweep(models, config, args.seed)
    rows = []
    for path, s in zip(args.files, summaries):
        print(f"{path}: success_proportion = {s.success_proportion!r} "
              f"failed_distance_mean = {s.failed_distance_mean!r} "
              f"final_by_max_mean = {float(s.mean_by_max[-1])!r}")
        for g in range(len(s.mean_raw)):
            rows.append((path, g, float(s.mean_raw[g]), float(s.std_raw[g]),
                         float(s.mean_by_max[g]), float(s.std_by_max[g]),
                         "" if s.mean_minmax is None else float(s.mean_minmax[g]),
                         "" if s.std_minmax is None else float(s.std_minmax[g])))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("file", "generation", "mean_raw", "std_raw", "mean_by_max", "std_by_max",
                        "mean_minmax", "std_minmax"))
            w.writerows(rows)
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("file", "seed", "generation", "best_raw", "best_by_max", "best_minmax",
                        "distance_to_opt", "found_global"))
            for path, s in zip(args.files, summaries):
                for t in s.traces:
                    for g, raw in enumerate(t.best_raw):
                        mm = "" if t.best_minmax is None else float(t.best_minmax[g])
                        w.writerow((path, t.seed, g, float(raw), float(t.best_by_max[g]), mm,
                                    t.distance, int(t.found_global)))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.list or not args.id:
        for eid, exp in EXPERIMENTS.items():
            print(f"{eid:26s} {exp.description}")
        return EXIT_OK if args.list else EXIT_USER
    kwargs = {k: getattr(args, k) for k in ("n", "sigmas", "replicates", "orders", "proportions")
              if getattr(args, k) is not None}
    if args.config:
        kwargs["ga"] = GAConfig.from_file(args.config)
    spec = ExperimentSpec(args.id, seed=args.seed, budget=args.budget, output_dir=args.out_dir,
                          walks=args.walks, steps=args.steps, **kwargs)
    for path in run_experiment(spec):
        print(path)
    return EXIT_OK


def cmd_walsh(args) -> int:
    src = load_document(args.file)
    if isinstance(src, NKLandscape):
        raise UnsupportedModelError("NK landscapes have no direct Walsh conversion here")
    if args.roundtrip:
        model = from_walsh(src) if isinstance(src, WalshPolynomial) else src
        w = to_walsh(model)
        if 1 << model.n > args.budget:
            raise BudgetExceededError(1 << model.n, args.budget)
        dev = float(np.max(np.abs(tabulate_binary(model) - evaluate_walsh_all(w))))
        back = from_walsh(w)
        same = back.n == model.n and back.terms == model.terms
        print(f"max_pointwise_deviation = {dev!r}")
        print(f"terms_preserved = {str(same).lower()}")
        return EXIT_OK if same else EXIT_USER
    if isinstance(src, WalshPolynomial):
        _emit(serialize(from_walsh(src)), args.output)
    else:
        _emit(serialize_walsh(to_walsh(src)), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nmland", description="NM, NK and Walsh benchmark landscapes")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="build and serialise an NM landscape")
    g.add_argument("--type", type=int, choices=(1, 2, 3), required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m-order", type=int, help="maximum interaction order (default n)")
    g.add_argument("--sigma", type=float, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--proportion", type=float, help="Type I, M=2: share of pairwise terms kept")
    g.add_argument("--alphabet", type=_alphabet, help="a,b,arity with arity an integer or 'real'")
    g.add_argument("--constant", action="store_true", help="include a constant term")
    g.add_argument("--uniform", action="store_true", help="coefficients uniform on (0, 1]")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="statistics of a landscape file")
    a.add_argument("file")
    for flag in ("peaks", "autocorr", "basin", "histogram", "extremes"):
        a.add_argument(f"--{flag}", action="store_true")
    a.add_argument("--profile", metavar="CSV", help="write the distance profile to CSV")
    a.add_argument("--csv", help="append one stats row to this CSV (header written when new)")
    a.add_argument("--plateaus", action="store_true", help="count equal-fitness plateaus as peaks")
    a.add_argument("--weighting", choices=("recursive", "membership"), default="recursive")
    a.add_argument("--bins", type=int, default=30)
    a.add_argument("--walks", type=int, default=10)
    a.add_argument("--steps", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    a.set_defaults(func=cmd_analyze)

    k = sub.add_parser("nk", help="generate (and optionally analyse) an NK landscape")
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--k", type=int, required=True)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--analyze", action="store_true")
    k.add_argument("--walks", type=int, default=10)
    k.add_argument("--steps", type=int, default=10_000)
    k.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    k.add_argument("-o", "--output")
    k.set_defaults(func=cmd_nk)

    s = sub.add_parser("ga", help="GA runs on one or more landscape files")
    s.add_argument("files", nargs="+")
    s.add_argument("--config", help="key = value file of GA settings")
    s.add_argument("--runs", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv", help="write per-generation means and deviations")
    s.add_argument("--trace-csv", help="write every run's per-generation trace")
    s.set_defaults(func=cmd_ga)

    e = sub.add_parser("experiment", help="run a registered experiment and write CSV tables")
    e.add_argument("id", nargs="?", choices=list(EXPERIMENTS))
    e.add_argument("--list", action="store_true")
    e.add_argument("--n", type=int)
    e.add_argument("--sigma", dest="sigmas", type=_floats, help="comma-separated sigma values")
    e.add_argument("--replicates", type=int)
    e.add_argument("--orders", type=_ints, help="comma-separated maximum orders")
    e.add_argument("--proportions", type=_floats)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    e.add_argument("--walks", type=int, default=10)
    e.add_argument("--steps", type=int, default=10_000)
    e.add_argument("--config", help="GA settings file for the GA experiments")
    e.add_argument("--out-dir", default="results")
    e.set_defaults(func=cmd_experiment)

    w = sub.add_parser("walsh", help="convert between interaction and Walsh forms")
    w.add_argument("file")
    w.add_argument("--roundtrip", action="store_true",
                   help="check pointwise equality and term identity instead of converting")
    w.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    w.add_argument("-o", "--output")
    w.set_defaults(func=cmd_walsh)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) == "gen" and args.sigma is None and not args.uniform:
            raise UsageError("gen: --sigma is required unless --uniform is given")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (LandscapeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
