"""Random-model generators and brute-force oracles shared by the tests."""

import itertools
import math

import numpy as np

from nmlandscapes.model import Alphabet, InteractionModel, Kind, Term, sample_coefficients


def candidate_sets(n, kind, even_only=False):
    for k in range(1, n + 1):
        if kind == Kind.TYPE_III and k % 2 == 0:
            continue
        if even_only and k % 2:
            continue
        for u in itertools.combinations(range(1, n + 1), k):
            if kind == Kind.TYPE_II and sum(i % 2 for i in u) % 2 == 0:
                continue
            yield u


def random_model(rng, n, kind=Kind.TYPE_I, alphabet=None, density=0.3, mains=False,
                 even_only=False, constant=False, sigma=None):
    """Random subset of the admissible index sets with random coefficients.

    ``even_only`` models always contain the chain {1,2},{2,3},... so the
    sign pattern of a maximiser is forced to be uniform.
    """
    kind = Kind(kind)
    alphabet = alphabet or Alphabet(1.0, 1.0, 2)
    sets = {u for u in candidate_sets(n, kind, even_only) if rng.random() < density}
    if mains:
        start, step = (1, 2) if kind == Kind.TYPE_II else (1, 1)
        sets |= {(i,) for i in range(start, n + 1, step)}
    if even_only:
        sets |= {(i, i + 1) for i in range(1, n)}
    if not sets:
        sets = {next(iter(candidate_sets(n, kind, even_only)))}
    if constant:
        sets.add(())
    sets = sorted(sets, key=lambda u: (len(u), u))
    sigma = sigma if sigma is not None else float(rng.choice([1.0, float(n), 10.0]))
    coeffs = sample_coefficients(sigma, rng, len(sets))
    return InteractionModel(n, tuple(Term(u, c) for u, c in zip(sets, coeffs)), alphabet, kind, sigma)


def all_points(alphabet, n):
    """Every point in mixed-radix order (feature 1 varies fastest)."""
    levels = alphabet.levels.tolist()
    for combo in itertools.product(levels, repeat=n):
        yield tuple(reversed(combo))


def rel_close(x, y, rtol=1e-12, scale=None):
    scale = max(abs(x), abs(y), 1e-300) if scale is None else scale
    return abs(x - y) <= rtol * scale


def skewness(values):
    v = np.asarray(values, dtype=float)
    d = v - v.mean()
    return float((d ** 3).mean() / (d ** 2).mean() ** 1.5)


def coefficient_scale(model):
    """Sum of |beta| * max|x|**order; bounds the magnitude of any fitness."""
    c = max(model.alphabet.a, model.alphabet.b)
    return math.fsum(abs(t.coeff) * c ** t.order for t in model.terms)


def climb_paths(el, start):
    """Every strictly improving path from ``start``, with the probability a
    uniform uphill walker takes it."""
    stack = [((start,), 1.0)]
    while stack:
        path, prob = stack.pop()
        p = path[-1]
        ups = [q for q in el.neighbor_table[p] if q >= 0 and el.fitness[q] > el.fitness[p]]
        if not ups:
            yield path, prob
            continue
        stack.extend((path + (q,), prob / len(ups)) for q in ups)


def path_basin(el, plateau_max=False):
    """Basin fraction of the global maximum by explicit path enumeration."""
    if plateau_max:
        tops = set(np.flatnonzero(el.fitness == el.fitness.max()).tolist())
    else:
        tops = {int(np.argmax(el.fitness))}
    total = 0.0
    for p in range(el.size):
        total += sum(prob for path, prob in climb_paths(el, p) if path[-1] in tops)
    return total / el.size
