"""Classic NK landscapes with random (not adjacent) neighbourhoods.

Loci are 0-based here since NK points are plain bit strings. The table
entry for locus ``i`` is addressed by the ``k + 1`` bits
``(y_i, y_{nb_0}, ..., y_{nb_{k-1}})`` read with ``y_i`` as the high bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError


@dataclass(frozen=True, eq=False)
class NKLandscape:
    n: int
    k: int
    neighbors: tuple[tuple[int, ...], ...]
    tables: np.ndarray
    seed: int | None = None
    topology: str = "random"

    def __post_init__(self):
        tables = np.array(self.tables, dtype=float)
        if tables.shape != (self.n, 1 << (self.k + 1)):
            raise InvalidInputError(f"tables must have shape ({self.n}, {1 << (self.k + 1)})")
        if np.any(tables < 0) or np.any(tables > 1):
            raise InvalidInputError("table entries must lie in [0, 1]")
        nbs = tuple(tuple(int(j) for j in row) for row in self.neighbors)
        if len(nbs) != self.n:
            raise InvalidInputError("one neighbour list per locus is required")
        for i, row in enumerate(nbs):
            if len(row) != self.k or len(set(row)) != self.k or i in row:
                raise InvalidInputError(f"locus {i} needs {self.k} distinct neighbours other than itself")
            if any(not 0 <= j < self.n for j in row):
                raise InvalidInputError(f"neighbour of locus {i} out of range")
        tables.flags.writeable = False
        object.__setattr__(self, "tables", tables)
        object.__setattr__(self, "neighbors", nbs)

    def __eq__(self, other):
        if not isinstance(other, NKLandscape):
            return NotImplemented
        return (self.n, self.k, self.neighbors, self.seed) == (other.n, other.k, other.neighbors, other.seed) \
            and np.array_equal(self.tables, other.tables)

    @property
    def loci(self) -> np.ndarray:
        """``(n, k + 1)`` array: each locus followed by its neighbours."""
        return np.array([(i, *nb) for i, nb in enumerate(self.neighbors)], dtype=np.int64).reshape(self.n, self.k + 1)


def generate_nk(n: int, k: int, seed: int) -> NKLandscape:
    if n < 1 or not 0 <= k <= n - 1:
        raise InvalidParameterError(f"need n >= 1 and 0 <= k <= n-1, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    neighbors = []
    for i in range(n):
        others = np.delete(np.arange(n), i)
        neighbors.append(tuple(int(j) for j in rng.choice(others, size=k, replace=False)))
    tables = rng.random((n, 1 << (k + 1)))
    return NKLandscape(n, k, tuple(neighbors), tables, seed)


def _table_index(L: NKLandscape, Y: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(L.k, -1, -1)
    return Y[:, L.loci] @ weights  # (P, n)


def evaluate_nk_many(L: NKLandscape, Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.int64)
    if Y.ndim != 2 or Y.shape[1] != L.n:
        raise InvalidInputError(f"expected shape (P, {L.n}), got {Y.shape}")
    idx = _table_index(L, Y)
    return L.tables[np.arange(L.n), idx].mean(axis=1)


def evaluate_nk(L: NKLandscape, y: Sequence[int]) -> float:
    """Mean over loci of the table contribution of each locus."""
    if len(y) != L.n:
        raise InvalidInputError(f"expected {L.n} bits, got {len(y)}")
    if any(b not in (0, 1) for b in y):
        raise InvalidInputError("NK points are 0/1 bit strings")
    return float(evaluate_nk_many(L, np.asarray([y]))[0])


def nk_to_document(L: NKLandscape) -> dict:
    return {
        "format_version": 1,
        "kind": "NK",
        "n": L.n,
        "k": L.k,
        "seed": L.seed,
        "topology": L.topology,
        "neighbors": [list(nb) for nb in L.neighbors],
        "tables": L.tables.tolist(),
    }


def nk_from_document(doc: dict) -> NKLandscape:
    try:
        return NKLandscape(int(doc["n"]), int(doc["k"]), tuple(tuple(r) for r in doc["neighbors"]),
                           np.asarray(doc["tables"], dtype=float), doc.get("seed"),
                           doc.get("topology", "random"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed NK document: {exc!r}") from exc


def serialize_nk(L: NKLandscape) -> str:
    return json.dumps(nk_to_document(L))


def deserialize_nk(text: str) -> NKLandscape:
    return nk_from_document(json.loads(text))
