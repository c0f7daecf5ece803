"""NM landscapes and general parametric interaction models.

A landscape is a sum of product terms ``beta_U * prod_{i in U} x_i`` over
``n`` features that all share one alphabet spanning ``[-a, b]``. NM landscapes
(Types I, II and III) restrict the coefficients to be positive and
``0 < a <= b``, which fixes the global maximum at ``[b, ..., b]``. Types II
and III additionally have a proven global minimum.

Feature indices are 1-based throughout, matching the usual algebraic notation.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import operator
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    InvalidInputError,
    InvalidParameterError,
    MinimumUnknownError,
    UnsupportedModelError,
)

FORMAT_VERSION = 1

# Largest number of product entries materialised at once by evaluate_many.
_EVAL_CHUNK = 1 << 22


class Kind(str, enum.Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"
    TYPE_III = "TypeIII"
    GENERAL = "General"

    @property
    def is_nm(self) -> bool:
        return self is not Kind.GENERAL


@dataclass(frozen=True)
class Alphabet:
    """Homogeneous feature domain ``[-a, b]`` with ``arity`` evenly spaced levels.

    ``arity=None`` denotes a real-valued alphabet.
    """

    a: float = 1.0
    b: float = 1.0
    arity: int | None = 2

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or not 0 < a <= b:
            raise InvalidParameterError(f"alphabet needs 0 < a <= b, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.arity is not None:
            if int(self.arity) != self.arity or self.arity < 2:
                raise InvalidParameterError(f"arity must be an integer >= 2, got {self.arity}")
            object.__setattr__(self, "arity", int(self.arity))

    @property
    def is_real(self) -> bool:
        return self.arity is None

    @property
    def is_binary(self) -> bool:
        return self.arity == 2

    @property
    def symmetric(self) -> bool:
        return self.a == self.b

    @cached_property
    def levels(self) -> np.ndarray:
        if self.arity is None:
            raise UnsupportedModelError("a real-valued alphabet has no finite level set")
        return np.linspace(-self.a, self.b, self.arity)

    def admits(self, value: float) -> bool:
        if self.arity is None:
            return -self.a <= value <= self.b
        tol = 1e-12 * (self.a + self.b)
        return bool(np.any(np.abs(self.levels - value) <= tol))


BINARY = Alphabet(1.0, 1.0, 2)


@dataclass(frozen=True)
class Term:
    """One product term; ``indices=()`` is the constant term."""

    indices: tuple[int, ...]
    coeff: float

    def __post_init__(self):
        idx = tuple(map(int, self.indices))
        if idx and (idx[0] < 1 or any(map(operator.ge, idx, idx[1:]))):
            raise InvalidInputError(
                f"term indices must be strictly increasing and 1-based, got {self.indices}"
            )
        coeff = float(self.coeff)
        if not math.isfinite(coeff) or coeff == 0.0:
            raise InvalidInputError(f"term coefficient must be finite and nonzero, got {coeff}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coeff", coeff)

    @property
    def order(self) -> int:
        return len(self.indices)

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.indices), self.indices)


def _odd_count_is_odd(indices: Sequence[int]) -> bool:
    return sum(i & 1 for i in indices) % 2 == 1


@dataclass(frozen=True)
class InteractionModel:
    """Landscape ``F(x) = sum_k beta_k prod_{i in U_k} x_i``.

    Terms are stored in canonical order (by order, then lexicographically).
    Instances are immutable; derived arrays are computed lazily and cached.
    """

    n: int
    terms: tuple[Term, ...]
    alphabet: Alphabet = BINARY
    kind: Kind = Kind.GENERAL
    sigma: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"feature count must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "kind", Kind(self.kind))
        terms = tuple(sorted(self.terms, key=Term.sort_key))
        object.__setattr__(self, "terms", terms)
        self._validate()

    def _validate(self) -> None:
        seen = set()
        for t in self.terms:
            if t.indices in seen:
                raise InvalidInputError(f"duplicate index set {t.indices}")
            seen.add(t.indices)
            if t.indices and t.indices[-1] > self.n:
                raise InvalidInputError(f"term {t.indices} references a feature beyond n={self.n}")
        kind = self.kind
        if not kind.is_nm:
            return
        if any(t.coeff < 0 for t in self.terms):
            raise InvalidInputError(f"{kind.value} landscapes require positive coefficients")
        if kind is Kind.TYPE_II:
            if not (self.alphabet.a == 1.0 and self.alphabet.b == 1.0):
                raise InvalidInputError("TypeII landscapes are defined on the range [-1, 1]")
            bad = [t.indices for t in self.terms if t.indices and not _odd_count_is_odd(t.indices)]
            if bad:
                raise InvalidInputError(f"TypeII terms need an odd number of odd indices: {bad[:3]}")
        elif kind is Kind.TYPE_III:
            bad = [t.indices for t in self.terms if t.order % 2 == 0]
            if bad:
                raise InvalidInputError(f"TypeIII landscapes allow only odd-order terms: {bad[:3]}")

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def max_order(self) -> int:
        return max((t.order for t in self.terms), default=0)

    @property
    def constant(self) -> float:
        if self.terms and not self.terms[0].indices:
            return self.terms[0].coeff
        return 0.0

    @cached_property
    def coeffs(self) -> np.ndarray:
        out = np.array([t.coeff for t in self.terms], dtype=float)
        out.flags.writeable = False
        return out

    @cached_property
    def orders(self) -> np.ndarray:
        out = np.array([t.order for t in self.terms], dtype=np.int64)
        out.flags.writeable = False
        return out

    @cached_property
    def masks(self) -> np.ndarray:
        """Bitmask per term, bit ``i-1`` set for feature ``i``."""
        if self.n > 62:
            raise UnsupportedModelError("bitmask representation needs n <= 62")
        out = np.array([sum(1 << (i - 1) for i in t.indices) for t in self.terms], dtype=np.int64)
        out.flags.writeable = False
        return out

    @cached_property
    def incidence(self) -> np.ndarray:
        """``(m, n)`` 0/1 matrix, row k marks the features of term k."""
        out = np.zeros((self.m, self.n), dtype=np.float32)
        for k, t in enumerate(self.terms):
            if t.indices:
                out[k, np.asarray(t.indices) - 1] = 1.0
        out.flags.writeable = False
        return out

    def with_terms(self, terms: Iterable[Term]) -> "InteractionModel":
        return InteractionModel(self.n, tuple(terms), self.alphabet, self.kind, self.sigma, self.seed)


# ---------------------------------------------------------------------------
# coefficient sampling and builders


def sample_coefficients(sigma: float, rng: np.random.Generator, size: int,
                        distribution: str = "exp-normal") -> np.ndarray:
    """Draw ``size`` coefficients in ``(0, 1]``.

    ``"exp-normal"`` gives ``exp(-|z|)`` with ``z ~ Normal(0, sigma)``;
    ``"uniform"`` draws uniformly from ``(0, 1]`` and ignores ``sigma``.
    """
    if distribution == "exp-normal":
        if not sigma > 0:
            raise InvalidParameterError(f"sigma must be positive, got {sigma}")
        out = np.exp(-np.abs(rng.normal(0.0, sigma, size)))
    elif distribution == "uniform":
        out = 1.0 - rng.random(size)
    else:
        raise InvalidParameterError(f"unknown coefficient distribution {distribution!r}")
    # exp underflows to 0 for |z| > ~745; keep coefficients strictly positive
    return np.maximum(out, np.finfo(float).tiny)


def sample_coefficient(sigma: float, rng: np.random.Generator) -> float:
    return float(sample_coefficients(sigma, rng, 1)[0])


def index_sets(n: int, orders: Iterable[int]) -> Iterator[tuple[int, ...]]:
    """All 1-based index sets of the given orders, in canonical order."""
    for k in sorted(set(orders)):
        yield from itertools.combinations(range(1, n + 1), k)


def _check_order(n: int, max_order: int) -> None:
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if int(max_order) != max_order or not 1 <= max_order <= n:
        raise InvalidParameterError(f"max_order must lie in 1..{n}, got {max_order}")


def _assemble(n, index_list, kind, alphabet, sigma, seed, rng, distribution, constant):
    if constant:
        index_list = [()] + list(index_list)
    coeffs = sample_coefficients(sigma, rng, len(index_list), distribution)
    terms = tuple(Term(u, c) for u, c in zip(index_list, coeffs))
    return InteractionModel(n, terms, alphabet, kind,
                            sigma if distribution == "exp-normal" else None, seed)


def build_type1(n: int, max_order: int, sigma: float, seed: int, *,
                alphabet: Alphabet = BINARY, constant: bool = False,
                distribution: str = "exp-normal") -> InteractionModel:
    """Type I model with every index set of order ``1..max_order``."""
    _check_order(n, max_order)
    rng = np.random.default_rng(seed)
    sets = list(index_sets(n, range(1, max_order + 1)))
    return _assemble(n, sets, Kind.TYPE_I, alphabet, sigma, seed, rng, distribution, constant)


def build_type1_master(n: int, sigma: float, seed: int, **kwargs) -> InteractionModel:
    """Type I model holding all ``2**n - 1`` nonempty index sets."""
    return build_type1(n, n, sigma, seed, **kwargs)


def build_type2(n: int, max_order: int, sigma: float, seed: int, *, arity: int = 2,
                constant: bool = False, distribution: str = "exp-normal") -> InteractionModel:
    """Type II model: every index set of order ``<= max_order`` with an odd
    number of odd indices, on the range ``[-1, 1]``."""
    _check_order(n, max_order)
    rng = np.random.default_rng(seed)
    sets = [u for u in index_sets(n, range(1, max_order + 1)) if _odd_count_is_odd(u)]
    return _assemble(n, sets, Kind.TYPE_II, Alphabet(1.0, 1.0, arity), sigma, seed, rng,
                     distribution, constant)


def build_type3(n: int, max_order: int, sigma: float, seed: int, *,
                alphabet: Alphabet = BINARY, distribution: str = "exp-normal") -> InteractionModel:
    """Type III model: every index set of odd order ``<= max_order``."""
    _check_order(n, max_order)
    if max_order % 2 == 0:
        raise InvalidParameterError(f"TypeIII needs an odd max_order, got {max_order}")
    rng = np.random.default_rng(seed)
    sets = list(index_sets(n, range(1, max_order + 1, 2)))
    return _assemble(n, sets, Kind.TYPE_III, alphabet, sigma, seed, rng, distribution, False)


def round_half_up(x: float) -> int:
    # tolerate representation error such as 0.7 * 10 = 7.000000000000001
    return int(math.floor(x + 0.5 + 1e-9))


def build_type1_proportion(n: int, proportion: float, sigma: float, seed: int, *,
                           alphabet: Alphabet = BINARY, constant: bool = False,
                           distribution: str = "exp-normal") -> InteractionModel:
    """All ``n`` main effects plus ``round(P * C(n, 2))`` random pairwise terms."""
    if not 0.0 <= proportion <= 1.0:
        raise InvalidParameterError(f"proportion must lie in [0, 1], got {proportion}")
    _check_order(n, 1)
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    count = round_half_up(proportion * len(pairs))
    chosen = sorted(rng.choice(len(pairs), size=count, replace=False).tolist()) if count else []
    sets = [(i,) for i in range(1, n + 1)] + [pairs[c] for c in chosen]
    return _assemble(n, sets, Kind.TYPE_I, alphabet, sigma, seed, rng, distribution, constant)


def restrict(model: InteractionModel, max_order: int) -> InteractionModel:
    """Sub-model keeping only terms of order ``<= max_order``."""
    return model.with_terms(t for t in model.terms if t.order <= max_order)


def _admissible_mains(master: InteractionModel) -> list[tuple[int, ...]]:
    if master.kind is Kind.TYPE_II:
        return [(i,) for i in range(1, master.n + 1, 2)]
    return [(i,) for i in range(1, master.n + 1)]


def subset_schedule(master: InteractionModel, group_size: int = 10,
                    rng: np.random.Generator | None = None) -> list[InteractionModel]:
    """Nested sub-models of ``master`` with a growing number of terms.

    The first model holds the main effects (and the constant term, if any).
    Each following model adds ``group_size`` randomly chosen unused terms of
    the lowest order that still has unused terms (fewer if that order runs
    out). The last model equals ``master``.
    """
    if group_size < 1:
        raise InvalidParameterError("group_size must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    present = {t.indices for t in master.terms}
    missing = [u for u in _admissible_mains(master) if u not in present]
    if missing:
        raise InvalidInputError(f"master is missing main effects {missing[:5]}")

    current = [t for t in master.terms if t.order <= 1]
    schedule = [master.with_terms(current)]
    for k in range(2, master.max_order + 1):
        pool = [t for t in master.terms if t.order == k]
        order = rng.permutation(len(pool))
        for start in range(0, len(pool), group_size):
            current = current + [pool[j] for j in order[start:start + group_size]]
            schedule.append(master.with_terms(current))
    return schedule


# ---------------------------------------------------------------------------
# evaluation


def _as_point(model: InteractionModel, x: Sequence[float]) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (model.n,):
        raise InvalidInputError(f"expected a point of length {model.n}, got shape {arr.shape}")
    alpha = model.alphabet
    for v in arr:
        if not alpha.admits(v):
            raise InvalidInputError(f"value {v} is not admissible for {alpha}")
    return arr


def evaluate(model: InteractionModel, x: Sequence[float]) -> float:
    """Fitness of a single point; products and the final sum are taken exactly
    as in :func:`max_value` so the two agree bit for bit at ``[b, ..., b]``."""
    xs = _as_point(model, x).tolist()
    return math.fsum(t.coeff * math.prod(xs[i - 1] for i in t.indices) for t in model.terms)


def evaluate_many(model: InteractionModel, points: np.ndarray) -> np.ndarray:
    """Vectorised fitness of a ``(P, n)`` array of points (no admissibility check)."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n:
        raise InvalidInputError(f"expected shape (P, {model.n}), got {X.shape}")
    out = np.zeros(X.shape[0])
    orders = model.orders
    coeffs = model.coeffs
    for k in np.unique(orders):
        sel = np.flatnonzero(orders == k)
        if k == 0:
            out += coeffs[sel].sum()
            continue
        idx = np.array([model.terms[j].indices for j in sel]) - 1
        step = max(1, _EVAL_CHUNK // max(1, X.shape[0] * k))
        for s in range(0, len(sel), step):
            prods = X[:, idx[s:s + step]].prod(axis=2)
            out += prods @ coeffs[sel[s:s + step]]
    return out


# ---------------------------------------------------------------------------
# extremes and normalisation


def _require_nm(model: InteractionModel) -> None:
    if model.kind is Kind.GENERAL and any(t.coeff < 0 for t in model.terms):
        raise UnsupportedModelError(
            "the maximum is only known for models with non-negative coefficients"
        )


def max_location(model: InteractionModel) -> tuple[float, ...]:
    _require_nm(model)
    return (model.alphabet.b,) * model.n


def max_value(model: InteractionModel) -> float:
    """Sum of ``beta_U * b**|U|``, O(m)."""
    _require_nm(model)
    b = model.alphabet.b
    return math.fsum(t.coeff * math.prod(b for _ in t.indices) for t in model.terms)


def min_location(model: InteractionModel) -> tuple[float, ...]:
    alpha = model.alphabet
    if model.kind is Kind.TYPE_II:
        return tuple(-1.0 if i % 2 == 1 else 1.0 for i in range(1, model.n + 1))
    if model.kind is Kind.TYPE_III:
        if not alpha.symmetric:
            raise MinimumUnknownError("the TypeIII minimum is only guaranteed for a == b")
        return (-alpha.a,) * model.n
    raise MinimumUnknownError(f"no known global minimum for {model.kind.value} landscapes")


def min_value(model: InteractionModel) -> float:
    return evaluate(model, min_location(model))


def min_value_closed_form(model: InteractionModel) -> float:
    """Negated weighted coefficient sum; a cross-check for models without a
    constant term (a constant keeps its sign at the minimiser)."""
    loc = min_location(model)
    if model.constant:
        raise UnsupportedModelError("closed form does not hold with a constant term")
    a = -loc[0] if model.kind is Kind.TYPE_III else 1.0
    return -math.fsum(t.coeff * a ** t.order for t in model.terms)


def normalize_by_max(model: InteractionModel, f):
    fmax = max_value(model)
    if fmax == 0:
        raise ZeroDivisionError("landscape maximum is zero")
    return np.asarray(f, dtype=float) / fmax if np.ndim(f) else float(f) / fmax


def normalize_minmax(model: InteractionModel, f):
    fmax, fmin = max_value(model), min_value(model)
    span = fmax - fmin
    if span == 0:
        raise ZeroDivisionError("landscape is flat: maximum equals minimum")
    return (np.asarray(f, dtype=float) - fmin) / span if np.ndim(f) else (float(f) - fmin) / span


# ---------------------------------------------------------------------------
# documents


def alphabet_to_doc(alpha: Alphabet) -> dict:
    return {"a": alpha.a, "b": alpha.b, "arity": "real" if alpha.arity is None else alpha.arity}


def alphabet_from_doc(doc: dict) -> Alphabet:
    arity = doc.get("arity", 2)
    return Alphabet(float(doc["a"]), float(doc["b"]), None if arity == "real" else int(arity))


def to_document(model: InteractionModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind.value,
        "n": model.n,
        "m": model.m,
        "max_order": model.max_order,
        "sigma": model.sigma,
        "seed": model.seed,
        "alphabet": alphabet_to_doc(model.alphabet),
        "terms": [{"indices": list(t.indices), "coeff": t.coeff} for t in model.terms],
    }


def from_document(doc: dict) -> InteractionModel:
    try:
        if doc["format_version"] != FORMAT_VERSION:
            raise InvalidInputError(f"unsupported format_version {doc['format_version']}")
        terms = tuple(Term(tuple(t["indices"]), t["coeff"]) for t in doc["terms"])
        model = InteractionModel(
            int(doc["n"]), terms, alphabet_from_doc(doc["alphabet"]), Kind(doc["kind"]),
            None if doc.get("sigma") is None else float(doc["sigma"]),
            None if doc.get("seed") is None else int(doc["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed landscape document: {exc!r}") from exc
    if "m" in doc and doc["m"] != model.m:
        raise InvalidInputError(f"document declares m={doc['m']} but holds {model.m} terms")
    if "max_order" in doc and doc["max_order"] != model.max_order:
        raise InvalidInputError("document max_order does not match its terms")
    return model


def serialize(model: InteractionModel) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(to_document(model))


def deserialize(text: str) -> InteractionModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"landscape document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInputError("landscape document must be a JSON object")
    return from_document(doc)


def save_model(model: InteractionModel, path: str | Path) -> None:
    Path(path).write_text(serialize(model))


def load_model(path: str | Path) -> InteractionModel:
    return deserialize(Path(path).read_text())
