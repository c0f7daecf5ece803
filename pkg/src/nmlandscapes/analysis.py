"""Exhaustive and sampling-based landscape statistics.

Points of a finite alphabet are addressed by a mixed-radix index: feature
``i`` (1-based) contributes ``level_i * arity**(i - 1)``, where level 0 is
``-a`` and level ``arity - 1`` is ``b``. For NK landscapes the same rule
applies with bit ``y_i`` as the level of locus ``i`` (0-based).

The neighbourhood of a point changes one feature by one level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from .errors import (
    BudgetExceededError,
    InvalidInputError,
    InvalidParameterError,
    UndefinedStatisticError,
    UnsupportedModelError,
)
from .model import InteractionModel, evaluate_many
from .nk import NKLandscape, evaluate_nk_many

DEFAULT_BUDGET = 1 << 26

Source = Union[InteractionModel, NKLandscape]


def index_to_levels(indices, n: int, arity: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    return (idx[..., None] // arity ** np.arange(n, dtype=np.int64)) % arity


def levels_to_index(levels, arity: int) -> np.ndarray:
    lv = np.asarray(levels, dtype=np.int64)
    return lv @ (arity ** np.arange(lv.shape[-1], dtype=np.int64))


@dataclass(frozen=True, eq=False)
class EvaluatedLandscape:
    """Fitness of every point, stored flat in mixed-radix order."""

    fitness: np.ndarray
    n: int
    arity: int
    source: Source | None = None

    def __post_init__(self):
        if self.fitness.shape != (self.arity ** self.n,):
            raise InvalidInputError("fitness table length must equal arity**n")

    @property
    def size(self) -> int:
        return self.fitness.size

    @property
    def tensor(self) -> np.ndarray:
        # axis 0 is feature n, the last axis is feature 1
        return self.fitness.reshape((self.arity,) * self.n)

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """``(size, degree)`` neighbour indices, ``-1`` where a move leaves the alphabet."""
        idx = np.arange(self.size, dtype=np.int64)
        r = self.arity
        cols = []
        for i in range(self.n):
            stride = r ** i
            if r == 2:
                cols.append(idx ^ stride)
                continue
            digit = (idx // stride) % r
            cols.append(np.where(digit > 0, idx - stride, -1))
            cols.append(np.where(digit < r - 1, idx + stride, -1))
        return np.stack(cols, axis=1)

    def levels(self, index: int) -> np.ndarray:
        return index_to_levels(index, self.n, self.arity)

    def point(self, index: int) -> tuple[float, ...]:
        lv = self.levels(index)
        if isinstance(self.source, InteractionModel):
            return tuple(self.source.alphabet.levels[lv].tolist())
        return tuple(int(v) for v in lv)

    @property
    def optimum_index(self) -> int:
        """Index of the known maximum for NM sources, otherwise the argmax."""
        if isinstance(self.source, InteractionModel) and self.source.kind.is_nm:
            return self.size - 1
        return int(np.argmax(self.fitness))


def enumerate_landscape(source: Source, budget: int = DEFAULT_BUDGET) -> EvaluatedLandscape:
    """Evaluate every point of a finite landscape."""
    if isinstance(source, NKLandscape):
        required = 1 << source.n
        if required > budget:
            raise BudgetExceededError(required, budget)
        fitness = np.empty(required)
        chunk = 1 << 16
        for start in range(0, required, chunk):
            idx = np.arange(start, min(start + chunk, required), dtype=np.int64)
            fitness[start:start + idx.size] = evaluate_nk_many(source, index_to_levels(idx, source.n, 2))
        return EvaluatedLandscape(fitness, source.n, 2, source)

    alpha = source.alphabet
    if alpha.is_real:
        raise UnsupportedModelError("cannot enumerate a real-valued alphabet")
    r, n = alpha.arity, source.n
    required = r ** n
    if required > budget:
        raise BudgetExceededError(required, budget)
    # Coefficient tensor over exponent patterns, then one (r x 2) change of
    # basis per feature: x**0 and x**1 evaluated at every level.
    coeffs = np.zeros(1 << n)
    coeffs[source.masks] = source.coeffs
    T = coeffs.reshape((2,) * n)
    V = np.stack([np.ones(r), alpha.levels], axis=1)
    for ax in range(n):
        T = np.moveaxis(np.tensordot(V, T, axes=(1, ax)), 0, ax)
    return EvaluatedLandscape(np.ascontiguousarray(T).ravel(), n, r, source)


# ---------------------------------------------------------------------------
# local peaks


def local_peak_mask(el: EvaluatedLandscape) -> np.ndarray:
    """True where a point is strictly fitter than every neighbour."""
    F = el.tensor
    mask = np.ones(F.shape, dtype=bool)
    for ax in range(el.n):
        lo = [slice(None)] * el.n
        hi = [slice(None)] * el.n
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        mask[lo] &= F[lo] > F[hi]
        mask[hi] &= F[hi] > F[lo]
    return mask.ravel()


def plateau_peak_labels(el: EvaluatedLandscape) -> tuple[np.ndarray, np.ndarray]:
    """Connected equal-fitness components and which of them are peaks.

    A component is a peak when none of its points has a strictly fitter
    neighbour. Without ties every component is a single point and this
    reduces to :func:`local_peak_mask`.
    """
    F = el.fitness
    nb = el.neighbor_table
    valid = nb >= 0
    nbF = np.where(valid, F[np.where(valid, nb, 0)], -np.inf)
    has_higher = (nbF > F[:, None]).any(axis=1)
    rows, cols = np.nonzero(valid & (nbF == F[:, None]))
    graph = sparse.coo_matrix((np.ones(rows.size), (rows, nb[rows, cols])), shape=(el.size, el.size))
    _, labels = csgraph.connected_components(graph, directed=False)
    blocked = np.bincount(labels, weights=has_higher.astype(float)) > 0
    return labels, ~blocked


def count_local_peaks(el: EvaluatedLandscape, plateaus: bool = False) -> int:
    """Number of local peaks.

    By default a peak must be strictly fitter than all its neighbours, so
    ties disqualify. ``plateaus=True`` counts each maximal equal-fitness
    plateau with no fitter neighbour once instead.
    """
    if plateaus:
        _, is_peak = plateau_peak_labels(el)
        return int(is_peak.sum())
    return int(local_peak_mask(el).sum())


# ---------------------------------------------------------------------------
# random walks


def walk_levels(n: int, arity: int, steps: int, rng: np.random.Generator,
                start: np.ndarray | None = None) -> np.ndarray:
    """Level vectors visited by a uniform random neighbour walk, ``(steps+1, n)``."""
    if steps < 1:
        raise InvalidParameterError("a walk needs at least one step")
    cur = rng.integers(0, arity, n) if start is None else np.asarray(start, dtype=np.int64).copy()
    if arity == 2:
        flips = np.zeros((steps + 1, n), dtype=np.int64)
        flips[np.arange(1, steps + 1), rng.integers(0, n, steps)] = 1
        return np.cumsum(flips, axis=0) % 2 ^ cur
    out = np.empty((steps + 1, n), dtype=np.int64)
    out[0] = cur
    for t in range(1, steps + 1):
        moves = [(i, -1) for i in range(n) if cur[i] > 0] + [(i, 1) for i in range(n) if cur[i] < arity - 1]
        i, d = moves[rng.integers(len(moves))]
        cur[i] += d
        out[t] = cur
    return out


def random_walk(landscape, steps: int, rng: np.random.Generator) -> np.ndarray:
    """Fitness sequence (length ``steps + 1``) of a random neighbour walk
    starting from a uniformly random point."""
    if steps < 2:
        raise InvalidParameterError("random walks need steps >= 2")
    if isinstance(landscape, EvaluatedLandscape):
        lv = walk_levels(landscape.n, landscape.arity, steps, rng)
        return landscape.fitness[levels_to_index(lv, landscape.arity)]
    if isinstance(landscape, NKLandscape):
        return evaluate_nk_many(landscape, walk_levels(landscape.n, 2, steps, rng))
    alpha = landscape.alphabet
    if alpha.is_real:
        raise UnsupportedModelError("random walks need a finite alphabet")
    lv = walk_levels(landscape.n, alpha.arity, steps, rng)
    return evaluate_many(landscape, alpha.levels[lv])


def lag1_autocorrelation(f) -> float:
    """Pearson correlation between consecutive values of a sequence."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size < 3:
        raise UndefinedStatisticError("need a sequence of at least 3 values")
    a, b = f[:-1], f[1:]
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedStatisticError("autocorrelation of a constant sequence is undefined")
    return float(np.clip(np.corrcoef(a, b)[0, 1], -1.0, 1.0))


def mean_walk_autocorrelation(landscape, rng: np.random.Generator, walks: int = 10,
                              steps: int = 10_000) -> float:
    return float(np.mean([lag1_autocorrelation(random_walk(landscape, steps, rng))
                          for _ in range(walks)]))


# ---------------------------------------------------------------------------
# basin of attraction of the global maximum


def _global_top(el: EvaluatedLandscape, plateau_max: bool) -> np.ndarray:
    top = el.fitness == el.fitness.max()
    if top.sum() > 1 and not plateau_max:
        raise UnsupportedModelError(
            f"landscape has {int(top.sum())} global maxima; the basin statistic needs a unique one"
        )
    return top


def _higher_neighbors(el: EvaluatedLandscape):
    F = el.fitness
    nb = el.neighbor_table
    valid = nb >= 0
    nbF = np.where(valid, F[np.where(valid, nb, 0)], -np.inf)
    return nb, nbF > F[:, None]


def basin_weights(el: EvaluatedLandscape, weighting: str = "recursive",
                  plateau_max: bool = False) -> np.ndarray:
    """Per-point membership weight in the basin of the global maximum.

    ``"recursive"``: the global maximum weighs 1; any other point weighs the
    mean weight of its strictly fitter neighbours (0 at a sub-optimal peak).
    That is the probability that a climber taking uniformly random uphill
    steps ends on the global maximum.

    ``"membership"``: a point is in the basin when some uphill path reaches
    the global maximum; its weight is the fraction of its fitter neighbours
    that are in the basin.

    ``plateau_max=True`` treats a set of tied global maximisers as the target.
    """
    if weighting not in ("recursive", "membership"):
        raise InvalidParameterError(f"unknown weighting {weighting!r}")
    top = _global_top(el, plateau_max)
    nb, higher = _higher_neighbors(el)
    order = np.argsort(-el.fitness, kind="stable")
    w = top.astype(float)
    if weighting == "recursive":
        for p in order:
            if top[p]:
                continue
            up = nb[p, higher[p]]
            if up.size:
                w[p] = w[up].mean()
        return w
    reach = top.copy()
    for p in order:
        if not top[p]:
            reach[p] = reach[nb[p, higher[p]]].any()
    for p in order:
        if not top[p]:
            up = nb[p, higher[p]]
            w[p] = reach[up].mean() if up.size else 0.0
    return w


def basin_fraction(el: EvaluatedLandscape, weighting: str = "recursive",
                   plateau_max: bool = False) -> float:
    """Weighted share of all points that climb to the global maximum, in [0, 1]."""
    return float(basin_weights(el, weighting, plateau_max).mean())


def basin_fraction_markov(el: EvaluatedLandscape, plateau_max: bool = False) -> float:
    """Absorption probability of the uniform uphill walk, from a sparse linear
    solve. Independent cross-check of the ``"recursive"`` weighting."""
    top = _global_top(el, plateau_max)
    nb, higher = _higher_neighbors(el)
    counts = higher.sum(axis=1)
    transient = np.flatnonzero(counts > 0)
    pos = -np.ones(el.size, dtype=np.int64)
    pos[transient] = np.arange(transient.size)
    rows, cols = np.nonzero(higher[transient])
    targets = nb[transient[rows], cols]
    probs = 1.0 / counts[transient[rows]]
    inner = pos[targets] >= 0
    Q = sparse.csr_matrix((probs[inner], (rows[inner], pos[targets[inner]])),
                          shape=(transient.size, transient.size))
    rhs = np.bincount(rows[~inner], weights=probs[~inner] * top[targets[~inner]],
                      minlength=transient.size)
    h = top.astype(float)
    if transient.size:
        h[transient] = spsolve((sparse.identity(transient.size, format="csr") - Q).tocsc(), rhs)
    return float(h.mean())


# ---------------------------------------------------------------------------
# histograms and profiles


@dataclass(frozen=True)
class Histogram:
    counts: np.ndarray
    edges: np.ndarray


def fitness_histogram(el: EvaluatedLandscape, bins: int = 30) -> Histogram:
    lo, hi = float(el.fitness.min()), float(el.fitness.max())
    counts, edges = np.histogram(el.fitness, bins=bins, range=(lo, hi) if hi > lo else None)
    return Histogram(counts, edges)


@dataclass(frozen=True)
class Profile:
    """Per-point distance to the target (in single-level steps), fitness and peak flag."""

    index: np.ndarray
    distance: np.ndarray
    fitness: np.ndarray
    is_peak: np.ndarray


def distance_profile(el: EvaluatedLandscape, target: int | None = None) -> Profile:
    target = el.optimum_index if target is None else target
    lv = index_to_levels(np.arange(el.size), el.n, el.arity)
    dist = np.abs(lv - el.levels(target)).sum(axis=1)
    return Profile(np.arange(el.size), dist, el.fitness, local_peak_mask(el))


@dataclass
class LandscapeStats:
    peak_count: int
    lag1_autocorr: float
    basin_fraction: float | None
    histogram: Histogram
    profile: Profile


def landscape_stats(source: Source, rng: np.random.Generator, *, walks: int = 10,
                    steps: int = 10_000, bins: int = 30, plateaus: bool = False,
                    budget: int = DEFAULT_BUDGET) -> LandscapeStats:
    el = enumerate_landscape(source, budget)
    try:
        basin = basin_fraction(el)
    except UnsupportedModelError:
        basin = None
    return LandscapeStats(
        count_local_peaks(el, plateaus),
        mean_walk_autocorrelation(el, rng, walks, steps),
        basin,
        fitness_histogram(el, bins),
        distance_profile(el),
    )
