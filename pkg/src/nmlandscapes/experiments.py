"""Experiment runners for the reference result sets (ruggedness, basins, GA sweeps).

Every runner returns named :class:`Table` objects; :func:`run_experiment`
writes them as CSV files whose comment header embeds the full spec, plus a
JSON metadata sidecar (code version, seed rule, timestamp). Data files are
byte-identical across re-runs of the same spec.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .analysis import (
    DEFAULT_BUDGET,
    basin_fraction,
    count_local_peaks,
    distance_profile,
    enumerate_landscape,
    fitness_histogram,
    local_peak_mask,
    mean_walk_autocorrelation,
    plateau_peak_labels,
)
from .errors import BudgetExceededError, InvalidParameterError, UndefinedStatisticError
from .model import (
    Kind,
    build_type1,
    build_type1_master,
    build_type1_proportion,
    build_type2,
    build_type3,
    restrict,
    subset_schedule,
)
from .nk import NKLandscape, generate_nk
from .rng import derive_seed, substream
from .search import GAConfig, SearchTrace, ga_run, stack_series, summarize_traces, worker_count

# substream tags, so that families never share random streams
_TAG = {Kind.TYPE_I: 1, Kind.TYPE_II: 2, Kind.TYPE_III: 3, "NK": 4}


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def where(self, **match) -> "Table":
        idx = [self.columns.index(k) for k in match]
        keep = [r for r in self.rows if all(r[j] == v for j, v in zip(idx, match.values()))]
        return Table(self.columns, keep)


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of one experiment; ``None`` fields take the experiment's defaults.

    ``orders`` holds maximum interaction orders M (NK runs use K = M - 1).
    GA experiments draw ``replicates`` landscapes and run the GA once on each.
    """

    experiment_id: str
    n: int | None = None
    sigmas: tuple[float, ...] | None = None
    replicates: int | None = None
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    output_dir: str = "results"
    orders: tuple[int, ...] | None = None
    proportions: tuple[float, ...] | None = None
    walks: int = 10
    steps: int = 10_000
    ga: GAConfig = field(default_factory=GAConfig)

    def resolved(self) -> "ExperimentSpec":
        exp = get_experiment(self.experiment_id)
        filled = {k: v for k, v in exp.defaults.items() if getattr(self, k) is None}
        spec = replace(self, **filled)
        spec._validate()
        return spec

    def _validate(self):
        if self.n is not None and self.n < 1:
            raise InvalidParameterError("n must be >= 1")
        if self.replicates is not None and self.replicates < 1:
            raise InvalidParameterError("replicates must be >= 1")
        if self.seed < 0:
            raise InvalidParameterError("seed must be non-negative")
        if self.sigmas is not None and any(not s > 0 for s in self.sigmas):
            raise InvalidParameterError("every sigma must be positive")
        if self.orders is not None and any(not 1 <= m <= self.n for m in self.orders):
            raise InvalidParameterError(f"orders must lie in 1..{self.n}")
        if self.walks < 0 or self.steps < 1:
            raise InvalidParameterError("walks must be >= 0 and steps >= 1")

    def to_document(self) -> dict:
        doc = asdict(self)
        for k, v in doc.items():
            if isinstance(v, tuple):
                doc[k] = list(v)
        return doc


@dataclass(frozen=True)
class Experiment:
    experiment_id: str
    description: str
    run: Callable[[ExperimentSpec], dict[str, Table]]
    defaults: dict
    exhaustive: bool = True


# ---------------------------------------------------------------------------
# shared helpers


def _pool_map(fn, jobs: Sequence):
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _check_budget(spec: ExperimentSpec, arity: int = 2):
    required = arity ** spec.n
    if required > spec.budget:
        raise BudgetExceededError(required, spec.budget)


def _autocorr(el, rng, walks, steps) -> float:
    if walks == 0:
        return math.nan
    try:
        return mean_walk_autocorrelation(el, rng, walks, steps)
    except UndefinedStatisticError:
        return math.nan


def _master(kind: Kind, n: int, sigma: float, seed: int):
    if kind is Kind.TYPE_I:
        return build_type1_master(n, sigma, seed)
    return build_type2(n, n, sigma, seed)


def nk_support_terms(L: NKLandscape) -> int:
    """Number of index sets an equivalent interaction model could use: every
    nonempty subset of some locus' neighbourhood."""
    sets = set()
    for row in L.loci.tolist():
        row = sorted(row)
        for k in range(1, len(row) + 1):
            sets.update(combinations(row, k))
    return len(sets)


# ---------------------------------------------------------------------------
# ruggedness


def _nk_peaks_job(args):
    n, k, seed, r, walks, steps, budget = args
    s = derive_seed(seed, _TAG["NK"], k, r)
    L = generate_nk(n, k, s)
    el = enumerate_landscape(L, budget)
    ac = _autocorr(el, substream(seed, _TAG["NK"], k, r, 1), walks, steps)
    return (k, k + 1, r, s, nk_support_terms(L), count_local_peaks(el), ac)


def run_fig1(spec: ExperimentSpec) -> dict[str, Table]:
    _check_budget(spec)
    jobs = [(spec.n, m - 1, spec.seed, r, spec.walks, spec.steps, spec.budget)
            for m in spec.orders for r in range(spec.replicates)]
    cols = ("k", "max_order", "replicate", "landscape_seed", "support_terms", "peak_count", "lag1_autocorr")
    return {"nk_peaks": Table(cols, _pool_map(_nk_peaks_job, jobs))}


def _schedule_job(args):
    kind, n, sigma, seed, r, walks, steps, budget = args
    tag = _TAG[kind]
    s = derive_seed(seed, tag, r)
    sched = subset_schedule(_master(kind, n, sigma, s), 10, substream(seed, tag, r, 1))
    rows = []
    for step, model in enumerate(sched):
        el = enumerate_landscape(model, budget)
        ac = _autocorr(el, substream(seed, tag, r, 2, step), walks, steps)
        rows.append((kind.value, sigma, r, s, step, model.m, model.max_order,
                     count_local_peaks(el), count_local_peaks(el, plateaus=True), ac))
    return rows


SCHEDULE_COLUMNS = ("kind", "sigma", "replicate", "master_seed", "step", "m", "max_order",
                    "peaks_strict", "peaks_plateau", "lag1_autocorr")


def run_fig4(spec: ExperimentSpec) -> dict[str, Table]:
    _check_budget(spec)
    jobs = [(kind, spec.n, sigma, spec.seed, r, spec.walks, spec.steps, spec.budget)
            for kind in (Kind.TYPE_I, Kind.TYPE_II) for sigma in spec.sigmas
            for r in range(spec.replicates)]
    rows = [row for part in _pool_map(_schedule_job, jobs) for row in part]
    return {"schedule": Table(SCHEDULE_COLUMNS, rows)}


def _bands_job(args):
    n, sigma, orders, seed, r, walks, steps, budget = args
    s = derive_seed(seed, _TAG[Kind.TYPE_II], r, int(sigma * 1000))
    master = build_type2(n, n, sigma, s)
    rows = []
    for M in orders:
        model = restrict(master, M)
        el = enumerate_landscape(model, budget)
        ac = _autocorr(el, substream(seed, _TAG[Kind.TYPE_II], r, int(sigma * 1000), M), walks, steps)
        rows.append((sigma, r, s, M, model.m, count_local_peaks(el),
                     count_local_peaks(el, plateaus=True), ac))
    return rows


def run_fig13(spec: ExperimentSpec) -> dict[str, Table]:
    """Type II peak-count spread over sigma, at the end of every order band."""
    _check_budget(spec)
    jobs = [(spec.n, sigma, spec.orders, spec.seed, r, spec.walks, spec.steps, spec.budget)
            for sigma in spec.sigmas for r in range(spec.replicates)]
    rows = [row for part in _pool_map(_bands_job, jobs) for row in part]
    cols = ("sigma", "replicate", "master_seed", "max_order", "m", "peaks_strict",
            "peaks_plateau", "lag1_autocorr")
    table = Table(cols, rows)
    summary = []
    for sigma in spec.sigmas:
        for M in spec.orders:
            sub = table.where(sigma=sigma, max_order=M)
            p = sub.column("peaks_plateau").astype(float)
            summary.append((sigma, M, int(sub.column("m")[0]), float(p.mean()), float(p.std(ddof=1)) if p.size > 1 else 0.0))
    return {"bands": table,
            "summary": Table(("sigma", "max_order", "m", "peaks_mean", "peaks_std"), summary)}


# ---------------------------------------------------------------------------
# fitness distributions and profiles


def _distribution_tables(spec: ExperimentSpec, distribution: str) -> dict[str, Table]:
    _check_budget(spec)
    M = spec.orders[0]
    sigmas = spec.sigmas if distribution == "exp-normal" else (math.nan,)
    fit, hist, summ = [], [], []
    for sigma in sigmas:
        for r in range(spec.replicates):
            s = derive_seed(spec.seed, _TAG[Kind.TYPE_I], r)
            model = build_type1(spec.n, M, 1.0 if math.isnan(sigma) else sigma, s, distribution=distribution)
            el = enumerate_landscape(model, spec.budget)
            f = el.fitness
            fit.extend((distribution, sigma, r, i, float(v)) for i, v in enumerate(f))
            h = fitness_histogram(el, bins=30)
            hist.extend((distribution, sigma, r, b, float(h.edges[b]), float(h.edges[b + 1]), int(c))
                        for b, c in enumerate(h.counts))
            summ.append((distribution, sigma, r, s, M, float(f.mean()), float(f.std()),
                         float(stats.skew(f)), float(f.min()), float(f.max())))
    return {
        "fitness": Table(("distribution", "sigma", "replicate", "index", "fitness"), fit),
        "histogram": Table(("distribution", "sigma", "replicate", "bin", "lo", "hi", "count"), hist),
        "summary": Table(("distribution", "sigma", "replicate", "model_seed", "max_order", "mean", "std",
                          "skewness", "min", "max"), summ),
    }


def run_fig2(spec: ExperimentSpec) -> dict[str, Table]:
    return _distribution_tables(spec, "exp-normal")


def run_fig3(spec: ExperimentSpec) -> dict[str, Table]:
    return _distribution_tables(spec, "uniform")


def run_fig5_6(spec: ExperimentSpec) -> dict[str, Table]:
    _check_budget(spec)
    rows = []
    for kind in (Kind.TYPE_I, Kind.TYPE_II):
        for sigma in spec.sigmas:
            for r in range(spec.replicates):
                s = derive_seed(spec.seed, _TAG[kind], r)
                master = _master(kind, spec.n, sigma, s)
                for M in spec.orders:
                    el = enumerate_landscape(restrict(master, M), spec.budget)
                    prof = distance_profile(el)
                    labels, comp_peak = plateau_peak_labels(el)
                    plateau = comp_peak[labels]
                    top = el.fitness == el.fitness.max()
                    rows.extend(
                        (kind.value, sigma, r, M, int(i), int(d), float(f), bool(p), bool(q), bool(g))
                        for i, d, f, p, q, g in zip(prof.index, prof.distance, prof.fitness,
                                                    prof.is_peak, plateau, top)
                    )
    cols = ("kind", "sigma", "replicate", "max_order", "index", "distance", "fitness",
            "is_peak", "is_plateau_peak", "is_global_max")
    return {"profiles": Table(cols, rows)}


# ---------------------------------------------------------------------------
# basins


def _nearest_peak(el) -> float:
    peaks = np.flatnonzero(local_peak_mask(el))
    top = el.fitness.max()
    others = peaks[el.fitness[peaks] < top]
    if others.size == 0:
        return math.nan
    best = np.flatnonzero(el.fitness == top)
    d = np.bitwise_count(others[:, None] ^ best[None, :]).min()
    return float(d)


def _basin_job(args):
    family, n, sigma, orders, seed, r, budget = args
    rows = []
    if family == "NK":
        for M in orders:
            s = derive_seed(seed, _TAG["NK"], M - 1, r)
            rows.append(_basin_row(family, M, r, s, enumerate_landscape(generate_nk(n, M - 1, s), budget)))
        return rows
    kind = Kind(family)
    s = derive_seed(seed, _TAG[kind], r)
    master = _master(kind, n, sigma, s)
    for M in orders:
        rows.append(_basin_row(family, M, r, s, enumerate_landscape(restrict(master, M), budget)))
    return rows


def _basin_row(family, M, r, s, el):
    ties = int((el.fitness == el.fitness.max()).sum())
    return (family, M, r, s, ties,
            basin_fraction(el, "recursive", plateau_max=True),
            basin_fraction(el, "membership", plateau_max=True),
            _nearest_peak(el))


def run_fig7(spec: ExperimentSpec) -> dict[str, Table]:
    _check_budget(spec)
    sigma = spec.sigmas[0]
    jobs = [(family, spec.n, sigma, spec.orders, spec.seed, r, spec.budget)
            for family in (Kind.TYPE_I.value, Kind.TYPE_II.value, "NK")
            for r in range(spec.replicates)]
    rows = [row for part in _pool_map(_basin_job, jobs) for row in part]
    cols = ("family", "max_order", "replicate", "seed", "global_maxima", "basin_recursive",
            "basin_membership", "nearest_peak_distance")
    return {"basins": Table(cols, rows)}


# ---------------------------------------------------------------------------
# GA sweeps


def _ga_job(args):
    kind, key, n, sigma, seed, i, config = args
    ms = derive_seed(seed, _TAG[kind], key, i)
    if kind is Kind.TYPE_I:
        model = build_type1_proportion(n, key / 1000, sigma, ms)
    else:
        model = build_type3(n, key, sigma, ms)
    return ga_run(model, config, derive_seed(seed, _TAG[kind], key, i, 1))


def ga_traces(kind: Kind, keys: Sequence[float], spec: ExperimentSpec) -> dict[float, list[SearchTrace]]:
    """One GA run on each of ``spec.replicates`` landscapes per key.

    Keys are proportions of pairwise terms for Type I and maximum orders for
    Type III.
    """
    def code(k):
        return int(round(k * 1000)) if kind is Kind.TYPE_I else int(k)

    jobs = [(kind, code(k), spec.n, spec.sigmas[0], spec.seed, i, spec.ga)
            for k in keys for i in range(spec.replicates)]
    traces = _pool_map(_ga_job, jobs)
    R = spec.replicates
    return {k: traces[j * R:(j + 1) * R] for j, k in enumerate(keys)}


def _generation_table(label, groups, with_minmax, length):
    cols = [label, "generation", "mean_raw", "std_raw", "mean_by_max", "std_by_max"]
    if with_minmax:
        cols += ["mean_minmax", "std_minmax"]
    rows = []
    for key, traces in groups.items():
        s = summarize_traces(traces, length=length)
        for g in range(len(s.mean_raw)):
            row = [key, g, s.mean_raw[g], s.std_raw[g], s.mean_by_max[g], s.std_by_max[g]]
            if with_minmax:
                row += [s.mean_minmax[g], s.std_minmax[g]]
            rows.append(tuple(float(v) if isinstance(v, np.floating) else v for v in row))
    return Table(tuple(cols), rows)


def _run_table(label, groups):
    cols = (label, "landscape", "run_seed", "final_raw", "final_by_max", "found_global", "distance")
    rows = [(key, i, t.seed, float(t.best_raw[-1]), float(t.best_by_max[-1]), t.found_global, t.distance)
            for key, traces in groups.items() for i, t in enumerate(traces)]
    return Table(cols, rows)


def _success_table(label, groups):
    rows = []
    for key, traces in groups.items():
        s = summarize_traces(traces)
        failed = sum(not t.found_global for t in traces)
        rows.append((key, s.n_runs, s.success_proportion, failed, s.failed_distance_mean, s.failed_distance_std))
    return Table((label, "runs", "success_proportion", "failed_runs", "failed_distance_mean",
                  "failed_distance_std"), rows)


def run_fig8_9(spec: ExperimentSpec) -> dict[str, Table]:
    groups = ga_traces(Kind.TYPE_I, spec.proportions, spec)
    return {
        "generations": _generation_table("proportion", groups, False, spec.ga.generations + 1),
        "runs": _run_table("proportion", groups),
        "success": _success_table("proportion", groups),
    }


def run_fig10_11(spec: ExperimentSpec) -> dict[str, Table]:
    groups = ga_traces(Kind.TYPE_III, spec.orders, spec)
    return {
        "generations": _generation_table("max_order", groups, True, spec.ga.generations + 1),
        "runs": _run_table("max_order", groups),
        "success": _success_table("max_order", groups),
    }


def normalization_comparison(traces: Sequence[SearchTrace], length: int | None = None) -> Table:
    """Per generation: mean and cross-landscape spread of the best fitness, and
    mean relative gain over generation 0, under both normalisations."""
    rows = []
    for name, attr in (("by_max", "best_by_max"), ("minmax", "best_minmax")):
        G = stack_series([getattr(t, attr) for t in traces], length)
        gain = (G - G[:, :1]) / np.abs(G[:, :1])
        for g in range(G.shape[1]):
            rows.append((name, g, float(G[:, g].mean()), float(G[:, g].std()), float(gain[:, g].mean())))
    return Table(("normalization", "generation", "mean", "std", "mean_relative_gain"), rows)


def run_fig12(spec: ExperimentSpec) -> dict[str, Table]:
    groups = ga_traces(Kind.TYPE_III, spec.orders, spec)
    tables = {"generations": _generation_table("max_order", groups, True, spec.ga.generations + 1)}
    rows = []
    for M, traces in groups.items():
        rows.extend((M, *row) for row in normalization_comparison(traces, spec.ga.generations + 1).rows)
    tables["normalization"] = Table(("max_order", "normalization", "generation", "mean", "std",
                                     "mean_relative_gain"), rows)
    return tables


# ---------------------------------------------------------------------------
# registry and output


EXPERIMENTS: dict[str, Experiment] = {
    e.experiment_id: e
    for e in [
        Experiment("fig1_nk_peaks", "NK local peak counts for K = 1..N-1", run_fig1,
                   dict(n=10, orders=tuple(range(2, 11)), replicates=10)),
        Experiment("fig2_histograms", "fitness histograms, exp-normal coefficients", run_fig2,
                   dict(n=10, sigmas=(1.0, 10.0, 100.0), orders=(2,), replicates=1)),
        Experiment("fig3_uniform_histograms", "fitness histograms, uniform coefficients", run_fig3,
                   dict(n=10, orders=(2,), replicates=1)),
        Experiment("fig4_ruggedness_schedule", "peaks and walk autocorrelation along term schedules",
                   run_fig4, dict(n=10, sigmas=(10.0,), replicates=100)),
        Experiment("fig5_6_profiles", "fitness against distance to the global maximum", run_fig5_6,
                   dict(n=10, sigmas=(10.0,), orders=(1, 2, 3, 4, 6, 10), replicates=1)),
        Experiment("fig7_basins", "basin of the global maximum: Type I, Type II and NK", run_fig7,
                   dict(n=10, sigmas=(10.0,), orders=tuple(range(1, 11)), replicates=30)),
        Experiment("fig8_9_p_sweep", "GA on Type I, M=2, over the share of pairwise terms", run_fig8_9,
                   dict(n=32, sigmas=(32.0,), replicates=32,
                        proportions=tuple(round(0.1 * i, 1) for i in range(11))), exhaustive=False),
        Experiment("fig10_11_m_sweep", "GA on Type III over the maximum order", run_fig10_11,
                   dict(n=32, sigmas=(32.0,), orders=(1, 3, 5), replicates=32), exhaustive=False),
        Experiment("fig12_norm_compare", "GA progress under both normalisations", run_fig12,
                   dict(n=32, sigmas=(32.0,), orders=(3,), replicates=32), exhaustive=False),
        Experiment("fig13_sigma_spread", "Type II peak-count spread over sigma, N=15", run_fig13,
                   dict(n=15, sigmas=(15.0, 30.0, 100.0), orders=tuple(range(1, 16)), replicates=100)),
    ]
}


def get_experiment(experiment_id: str) -> Experiment:
    try:
        return EXPERIMENTS[experiment_id]
    except KeyError:
        known = ", ".join(EXPERIMENTS)
        raise InvalidParameterError(f"unknown experiment {experiment_id!r}; known: {known}") from None


def compute_experiment(spec: ExperimentSpec) -> dict[str, Table]:
    spec = spec.resolved()
    return get_experiment(spec.experiment_id).run(spec)


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return v


def table_to_csv(table: Table, header: str) -> str:
    buf = io.StringIO()
    for line in header.splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run_experiment(spec: ExperimentSpec) -> list[Path]:
    """Run ``spec`` and write ``<id>_<table>.csv`` files plus ``<id>.meta.json``.

    Raises :class:`BudgetExceededError` before any work when an exhaustive
    experiment needs more points per landscape than ``spec.budget``.
    """
    spec = spec.resolved()
    tables = get_experiment(spec.experiment_id).run(spec)
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = spec.to_document()
    # the output location is not a data parameter, keep it out of the CSVs
    params = {k: v for k, v in doc.items() if k != "output_dir"}
    header = "spec: " + json.dumps(params, sort_keys=True) + \
        "\nseeds: landscape and run seeds derive from (seed, family tag, parameter, replicate)" + \
        f"\ncode_version: {__version__}"
    paths, digests = [], {}
    for name, table in tables.items():
        path = out / f"{spec.experiment_id}_{name}.csv"
        text = table_to_csv(table, header)
        path.write_text(text)
        digests[path.name] = hashlib.sha256(text.encode()).hexdigest()
        paths.append(path)
    meta = {
        "experiment_id": spec.experiment_id,
        "spec": doc,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "workers": worker_count(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "files": digests,
    }
    meta_path = out / f"{spec.experiment_id}.meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return paths + [meta_path]
