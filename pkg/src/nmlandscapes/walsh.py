"""Walsh polynomials over bit strings and their exact correspondence with
binary interaction models.

Bit ``i`` of a partition index ``j`` (least significant bit = ``i = 0``)
refers to feature ``i + 1`` of the interaction model, and bit-string
position ``y[i]`` likewise maps to feature ``i + 1``. A model point ``x``
corresponds to ``y`` with ``y_i = 1`` where ``x_i = 1`` and ``y_i = 0``
where ``x_i = -1``.

Because ``psi_j(y) = prod_{i in U} (-1)**y_i = prod_{i in U} (-x_i)``, a
term ``beta_U prod_{i in U} x_i`` equals ``(-1)**|U| beta_U psi_j(y)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedModelError
from .model import BINARY, FORMAT_VERSION, InteractionModel, Kind, Term


@dataclass(frozen=True)
class WalshPolynomial:
    """Sparse Walsh coefficients ``omega[j]``; absent partitions are zero."""

    q: int
    omega: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise InvalidInputError(f"bit-string length must be >= 1, got {self.q}")
        clean = {}
        for j, w in self.omega.items():
            j = int(j)
            if not 0 <= j < 1 << self.q:
                raise InvalidInputError(f"partition index {j} out of range for q={self.q}")
            if w != 0:
                clean[j] = float(w)
        object.__setattr__(self, "omega", MappingProxyType(dict(sorted(clean.items()))))

    def __eq__(self, other):
        if not isinstance(other, WalshPolynomial):
            return NotImplemented
        return self.q == other.q and dict(self.omega) == dict(other.omega)

    def __hash__(self):
        return hash((self.q, tuple(self.omega.items())))


def bits_to_int(y: Sequence[int]) -> int:
    value = 0
    for i, bit in enumerate(y):
        if bit not in (0, 1):
            raise InvalidInputError(f"bit strings hold 0/1 values, got {bit!r}")
        value |= int(bit) << i
    return value


def psi(j: int, y: Sequence[int]) -> int:
    """Walsh function: +1 when ``y AND j`` has even parity, else -1."""
    q = len(y)
    if not 0 <= j < 1 << q:
        raise InvalidInputError(f"partition index {j} out of range for q={q}")
    return -1 if bin(bits_to_int(y) & j).count("1") & 1 else 1


def evaluate_walsh(w: WalshPolynomial, y: Sequence[int]) -> float:
    if len(y) != w.q:
        raise InvalidInputError(f"expected {w.q} bits, got {len(y)}")
    yi = bits_to_int(y)
    return float(sum(-c if bin(yi & j).count("1") & 1 else c for j, c in w.omega.items()))


def evaluate_walsh_all(w: WalshPolynomial) -> np.ndarray:
    """Values at every bit string, indexed by ``bits_to_int(y)``."""
    ys = np.arange(1 << w.q, dtype=np.int64)
    out = np.zeros(ys.size)
    for j, c in w.omega.items():
        parity = np.bitwise_count(ys & j) & 1
        out += np.where(parity == 1, -c, c)
    return out


def tabulate_binary(model: InteractionModel) -> np.ndarray:
    """Model values at every bit string, indexed like :func:`evaluate_walsh_all`.

    Terms are accumulated in partition-index order, the order the Walsh side
    uses, so corresponding forms agree bit for bit rather than to rounding.
    """
    if not model.alphabet.is_binary:
        raise UnsupportedModelError("bit-string tabulation needs a binary alphabet")
    ys = np.arange(1 << model.n, dtype=np.int64)
    X = np.where((ys[:, None] >> np.arange(model.n)) & 1, model.alphabet.b, -model.alphabet.a)
    out = np.zeros(ys.size)
    for t in sorted(model.terms, key=lambda t: sum(1 << (i - 1) for i in t.indices)):
        out += t.coeff * X[:, [i - 1 for i in t.indices]].prod(axis=1)
    return out


def x_to_bits(x: Sequence[float]) -> tuple[int, ...]:
    out = []
    for v in x:
        if v == 1:
            out.append(1)
        elif v == -1:
            out.append(0)
        else:
            raise InvalidInputError(f"only the {{-1, 1}} alphabet maps to bits, got {v}")
    return tuple(out)


def bits_to_x(y: Sequence[int]) -> tuple[float, ...]:
    return tuple(1.0 if b else -1.0 for b in y)


def to_walsh(model: InteractionModel) -> WalshPolynomial:
    alpha = model.alphabet
    if not (alpha.is_binary and alpha.a == 1.0 and alpha.b == 1.0):
        raise UnsupportedModelError("Walsh conversion needs the binary {-1, 1} alphabet")
    omega = {}
    for t in model.terms:
        j = sum(1 << (i - 1) for i in t.indices)
        omega[j] = -t.coeff if t.order % 2 else t.coeff
    return WalshPolynomial(model.n, omega)


def from_walsh(w: WalshPolynomial) -> InteractionModel:
    """Inverse of :func:`to_walsh`; the result is a General model since Walsh
    coefficients may be negative."""
    terms = []
    for j, c in w.omega.items():
        idx = tuple(i + 1 for i in range(w.q) if j >> i & 1)
        terms.append(Term(idx, -c if len(idx) % 2 else c))
    return InteractionModel(w.q, tuple(terms), BINARY, Kind.GENERAL)


def walsh_to_document(w: WalshPolynomial) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "Walsh",
        "q": w.q,
        "omega": [{"j": j, "coeff": c} for j, c in w.omega.items()],
    }


def walsh_from_document(doc: dict) -> WalshPolynomial:
    try:
        if doc.get("kind") != "Walsh":
            raise InvalidInputError("not a Walsh document")
        return WalshPolynomial(int(doc["q"]), {int(e["j"]): float(e["coeff"]) for e in doc["omega"]})
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed Walsh document: {exc!r}") from exc


def serialize_walsh(w: WalshPolynomial) -> str:
    return json.dumps(walsh_to_document(w))


def deserialize_walsh(text: str) -> WalshPolynomial:
    return walsh_from_document(json.loads(text))
