"""Hill climbing and a generational GA instrumented with the known optimum."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from ._kernels import odd_sums
from .analysis import EvaluatedLandscape, levels_to_index
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    MinimumUnknownError,
    UnsupportedModelError,
)
from .model import InteractionModel, evaluate_many, max_value, min_value
from .rng import derive_seed

# Terms per block in BinaryFitness; bounds the (terms x population) scratch arrays.
_TERM_BLOCK = 16384

SUCCESS_RTOL = 1e-9


class BinaryFitness:
    """Batch evaluator for binary-alphabet models.

    Genomes are boolean ``(P, n)`` arrays where ``True`` stands for ``b`` and
    ``False`` for ``-a``. For every term the number of ``-a`` factors is
    obtained with one float32 matrix product (exact for small integers), so
    a whole population costs a handful of BLAS calls.
    """

    def __init__(self, model: InteractionModel, compiled: bool = True):
        alpha = model.alphabet
        if not alpha.is_binary:
            raise UnsupportedModelError("the GA operates on binary alphabets only")
        self.model = model
        self.n = model.n
        self.a, self.b = alpha.a, alpha.b
        self._orders = model.orders
        self._coeffs = model.coeffs
        if alpha.symmetric:
            self._eff = model.coeffs * self.b ** model.orders
            self._total = math.fsum(self._eff)
        # parity kernel: x_U = b**|U| * (-1)**(number of -b factors) when a == b
        self.compiled = compiled and odd_sums is not None and alpha.symmetric and model.n <= 62
        if self.compiled:
            self._masks = np.ascontiguousarray(model.masks)
            self._bits = np.int64(1) << np.arange(model.n, dtype=np.int64)
        else:
            self._inc = model.incidence

    def __call__(self, genomes: np.ndarray) -> np.ndarray:
        G = np.asarray(genomes, dtype=bool)
        if G.ndim != 2 or G.shape[1] != self.n:
            raise InvalidInputError(f"expected genomes of shape (P, {self.n}), got {G.shape}")
        if self.compiled:
            neg_masks = (~G).astype(np.int64) @ self._bits
            return self._total - 2.0 * odd_sums(self._masks, self._eff, neg_masks)
        neg = (~G).T.astype(np.float32)
        out = np.zeros(G.shape[0])
        for s in range(0, self._inc.shape[0], _TERM_BLOCK):
            counts = self._inc[s:s + _TERM_BLOCK] @ neg
            if self.a == self.b:
                out += self._eff[s:s + _TERM_BLOCK] @ np.fmod(counts, 2)
            else:
                k = self._orders[s:s + _TERM_BLOCK, None]
                c = counts.astype(np.int64)
                vals = self._coeffs[s:s + _TERM_BLOCK, None] * self.b ** (k - c) * (-self.a) ** c
                out += vals.sum(axis=0)
        if self.a == self.b:
            return self._total - 2.0 * out
        return out


# ---------------------------------------------------------------------------
# hill climbing


def _levels_of_point(alpha_levels: np.ndarray, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lv = np.abs(x[:, None] - alpha_levels[None, :]).argmin(axis=1)
    if not np.allclose(alpha_levels[lv], x, rtol=0, atol=1e-12 * np.ptp(alpha_levels)):
        raise InvalidInputError("start point has values outside the alphabet levels")
    return lv


def hill_climb(landscape, start, rng: np.random.Generator | None = None,
               strategy: str = "steepest") -> tuple[tuple[float, ...], float]:
    """Climb to a local peak by single-level moves.

    ``"steepest"`` moves to the fittest strictly better neighbour, breaking
    ties by lowest point index. ``"random"`` picks uniformly among strictly
    better neighbours and needs ``rng``.
    """
    if strategy not in ("steepest", "random"):
        raise InvalidParameterError(f"unknown strategy {strategy!r}")
    if strategy == "random" and rng is None:
        raise InvalidParameterError("the random strategy needs an rng")

    if isinstance(landscape, EvaluatedLandscape):
        model = landscape.source
        n, r = landscape.n, landscape.arity

        def fitness(lvs):
            return landscape.fitness[levels_to_index(lvs, r)]
    else:
        model = landscape
        if model.alphabet.is_real:
            raise UnsupportedModelError("hill climbing needs a finite alphabet")
        n, r = model.n, model.alphabet.arity

        def fitness(lvs):
            return evaluate_many(model, model.alphabet.levels[lvs])

    levels = model.alphabet.levels if isinstance(model, InteractionModel) else np.array([0.0, 1.0])
    cur = _levels_of_point(levels, start)
    f_cur = float(fitness(cur[None, :])[0])
    while True:
        moves = []
        for i in range(n):
            for d in (-1, 1):
                if 0 <= cur[i] + d < r:
                    nxt = cur.copy()
                    nxt[i] += d
                    moves.append(nxt)
        cand = np.array(moves)
        f = fitness(cand)
        better = np.flatnonzero(f > f_cur)
        if better.size == 0:
            break
        if strategy == "steepest":
            best = better[f[better] == f[better].max()]
            pick = best[np.argmin(levels_to_index(cand[best], r))]
        else:
            pick = better[rng.integers(better.size)]
        cur, f_cur = cand[pick], float(f[pick])
    return tuple(levels[cur].tolist()), f_cur


# ---------------------------------------------------------------------------
# genetic algorithm


@dataclass
class GAConfig:
    population_size: int = 256
    crossover_rate: float = 0.7
    mutation_rate: float | None = None  # None means 1/n per bit
    generations: int = 30
    runs: int = 32
    selection: str = "rank"  # rank | proportionate | tournament
    normalization: str = "minmax"  # scale used by proportionate selection: minmax | by_max
    elitism: bool = True
    early_stop: bool = False
    tournament_size: int = 2

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise InvalidParameterError("population_size must be an even number >= 2")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1]")
        if self.generations < 0 or self.runs < 1:
            raise InvalidParameterError("generations must be >= 0 and runs >= 1")
        if self.selection not in ("proportionate", "rank", "tournament"):
            raise InvalidParameterError(f"unknown selection {self.selection!r}")
        if self.normalization not in ("minmax", "by_max"):
            raise InvalidParameterError(f"unknown normalization {self.normalization!r}")

    @classmethod
    def from_text(cls, text: str) -> "GAConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise InvalidInputError(f"line {lineno}: unknown key {key!r}")
            kwargs[key] = _parse_value(key, value, types[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "GAConfig":
        return cls.from_text(Path(path).read_text())


def _parse_value(key, value, type_name):
    try:
        if value.lower() in ("none", "null") and "None" in type_name:
            return None
        if type_name.startswith("bool"):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        if type_name.startswith("int"):
            return int(value)
        if type_name.startswith("float"):
            return float(value)
        return value
    except ValueError:
        raise InvalidInputError(f"bad value for {key}: {value!r}") from None


@dataclass
class SearchTrace:
    best_raw: np.ndarray
    best_by_max: np.ndarray
    best_minmax: np.ndarray | None
    best_point: tuple[float, ...]
    distance: int
    found_global: bool
    seed: int

    @property
    def generations_run(self) -> int:
        return len(self.best_raw) - 1


def _selection_weights(f, config, fmax, fmin):
    P = f.size
    scheme = config.selection
    if scheme == "proportionate":
        if config.normalization == "minmax" and fmin is not None:
            w = (f - fmin) / (fmax - fmin)
        elif config.normalization == "by_max":
            w = f / fmax
            if w.min() < 0:
                w = w - w.min()
        else:
            scheme = "rank"  # min unknown: raw fitness may be negative
    if scheme == "rank":
        w = np.empty(P)
        w[np.argsort(f, kind="stable")] = np.arange(1, P + 1)
    total = w.sum()
    return np.full(P, 1.0 / P) if total <= 0 else w / total


def _select(f, config, fmax, fmin, rng):
    P = f.size
    if config.selection == "tournament":
        entrants = rng.integers(0, P, (P, config.tournament_size))
        return entrants[np.arange(P), np.argmax(f[entrants], axis=1)]
    return rng.choice(P, size=P, p=_selection_weights(f, config, fmax, fmin))


def ga_run(model: InteractionModel, config: GAConfig, seed: int,
           fitness: BinaryFitness | None = None) -> SearchTrace:
    """One generational GA run; the trace holds generation 0 (the random
    initial population) through ``config.generations``."""
    fit = BinaryFitness(model) if fitness is None else fitness
    n, P = model.n, config.population_size
    fmax = max_value(model)
    try:
        fmin = min_value(model)
    except MinimumUnknownError:
        fmin = None
    mu = 1.0 / n if config.mutation_rate is None else config.mutation_rate
    rng = np.random.default_rng(seed)
    tol = SUCCESS_RTOL * abs(fmax) if fmax else SUCCESS_RTOL

    pop = rng.random((P, n)) < 0.5
    cache: dict[bytes, float] = {}
    best_raw = []
    best_g, best_f = None, -np.inf
    for gen in range(config.generations + 1):
        keys = [row.tobytes() for row in np.packbits(pop, axis=1)]
        todo = [i for i, k in enumerate(keys) if k not in cache]
        if todo:
            for i, v in zip(todo, fit(pop[todo])):
                cache[keys[i]] = float(v)
        f = np.array([cache[k] for k in keys])
        i_best = int(np.argmax(f))
        if f[i_best] > best_f:
            best_f, best_g = float(f[i_best]), pop[i_best].copy()
        best_raw.append(best_f if config.elitism else float(f[i_best]))
        if gen == config.generations or (config.early_stop and abs(best_f - fmax) <= tol):
            break

        parents = pop[_select(f, config, fmax, fmin, rng)]
        parents = parents[rng.permutation(P)]
        p1, p2 = parents[0::2], parents[1::2]
        cross = rng.random(P // 2) < config.crossover_rate
        mask = (rng.random((P // 2, n)) < 0.5) & cross[:, None]
        children = np.concatenate([np.where(mask, p2, p1), np.where(mask, p1, p2)])
        children ^= rng.random((P, n)) < mu
        if config.elitism:
            children[0] = pop[i_best]
        pop = children

    best_raw = np.array(best_raw)
    alpha = model.alphabet
    return SearchTrace(
        best_raw=best_raw,
        best_by_max=best_raw / fmax,
        best_minmax=None if fmin is None else (best_raw - fmin) / (fmax - fmin),
        best_point=tuple(alpha.b if v else -alpha.a for v in best_g),
        distance=int(n - best_g.sum()),
        found_global=bool(abs(best_f - fmax) <= tol),
        seed=seed,
    )


@dataclass
class SweepSummary:
    """Aggregates over a group of GA traces (one model's runs, or one run
    on each of several models)."""

    n_runs: int
    mean_raw: np.ndarray
    std_raw: np.ndarray
    mean_by_max: np.ndarray
    std_by_max: np.ndarray
    mean_minmax: np.ndarray | None
    std_minmax: np.ndarray | None
    success_proportion: float
    failed_distance_mean: float
    failed_distance_std: float
    traces: list[SearchTrace] = field(default_factory=list, repr=False)
    failed_runs: int = 0

    @property
    def partial(self) -> bool:
        return self.failed_runs > 0


def stack_series(series, length=None):
    width = max(max(len(s) for s in series), length or 0)
    # early-stopped runs keep their final best for the remaining generations
    return np.array([np.pad(s, (0, width - len(s)), mode="edge") for s in series])


def summarize_traces(traces: Sequence[SearchTrace], failed_runs: int = 0,
                     length: int | None = None) -> SweepSummary:
    """Aggregate traces; series shorter than ``length`` (or the longest
    trace) are padded with their final value."""
    if not traces:
        raise InvalidInputError("no traces to summarise")
    raw = stack_series([t.best_raw for t in traces], length)
    bym = stack_series([t.best_by_max for t in traces], length)
    has_mm = all(t.best_minmax is not None for t in traces)
    mm = stack_series([t.best_minmax for t in traces], length) if has_mm else None
    failed = np.array([t.distance for t in traces if not t.found_global], dtype=float)
    return SweepSummary(
        n_runs=len(traces),
        mean_raw=raw.mean(axis=0), std_raw=raw.std(axis=0),
        mean_by_max=bym.mean(axis=0), std_by_max=bym.std(axis=0),
        mean_minmax=None if mm is None else mm.mean(axis=0),
        std_minmax=None if mm is None else mm.std(axis=0),
        success_proportion=float(np.mean([t.found_global for t in traces])),
        failed_distance_mean=float(failed.mean()) if failed.size else float("nan"),
        failed_distance_std=float(failed.std()) if failed.size else float("nan"),
        traces=list(traces),
        failed_runs=failed_runs,
    )


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("NMLAND_WORKERS", "1")))
    except ValueError:
        return 1


def _run_model(args):
    model, config, seeds, on_error = args
    fit = BinaryFitness(model)
    traces, failed = [], 0
    for s in seeds:
        try:
            traces.append(ga_run(model, config, s, fit))
        except Exception:
            if on_error == "raise":
                raise
            failed += 1
    return traces, failed


def ga_sweep(models: Sequence[InteractionModel], config: GAConfig, master_seed: int,
             on_error: str = "raise") -> list[SweepSummary]:
    """``config.runs`` GA runs on every model; one summary per model.

    Run ``r`` on model ``i`` uses the seed derived from ``(master_seed, i, r)``.
    With ``on_error="skip"`` failing runs are dropped and counted in
    ``failed_runs``.
    """
    if on_error not in ("raise", "skip"):
        raise InvalidParameterError("on_error must be 'raise' or 'skip'")
    jobs = [(m, config, [derive_seed(master_seed, i, r) for r in range(config.runs)], on_error)
            for i, m in enumerate(models)]
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_model, jobs))
    else:
        results = [_run_model(j) for j in jobs]
    return [summarize_traces(traces, failed, config.generations + 1) for traces, failed in results]
