"""NK fitness landscapes: generation, evaluation and exhaustive solving."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .validation import check_binary_matrix, check_bits, check_count

MAX_ENUMERATION_N = 30
_ENUM_CHUNK = 1 << 14


@dataclass(frozen=True)
class Solution:
    bits: np.ndarray
    fitness: float | None = None

    def __eq__(self, other):
        if not isinstance(other, Solution):
            return NotImplemented
        return np.array_equal(self.bits, other.bits) and self.fitness == other.fitness

    def __hash__(self):
        return hash((self.bits.tobytes(), self.fitness))


@dataclass(frozen=True, eq=False)
class NkInstance:
    """An NK-landscape with N binary variables and K neighbours each.

    ``neighbors`` is an ``(n, k)`` array of 0-based variable indices and
    ``tables`` an ``(n, 2**(k+1))`` array. Row ``q`` of ``tables`` is indexed
    by the bits ``(x_q, x_nb[0], ..., x_nb[k-1])`` read as a binary number
    with ``x_q`` most significant.
    """

    n: int
    k: int
    neighbors: np.ndarray
    tables: np.ndarray
    seed: int | None = None
    optimum: tuple[float, np.ndarray] | None = field(default=None)

    def __post_init__(self):
        neighbors = np.asarray(self.neighbors, dtype=np.int64)
        tables = np.asarray(self.tables, dtype=np.float64)
        if not 1 <= self.k <= self.n - 1:
            raise ValueError(f"need 1 <= k <= n-1, got n={self.n}, k={self.k}")
        if neighbors.shape != (self.n, self.k):
            raise ValueError(f"neighbors must have shape {(self.n, self.k)}")
        if tables.shape != (self.n, 1 << (self.k + 1)):
            raise ValueError(f"tables must have shape {(self.n, 1 << (self.k + 1))}")
        for q, row in enumerate(neighbors):
            if len(set(row.tolist())) != self.k or q in row or row.min() < 0 or row.max() >= self.n:
                raise ValueError(f"invalid neighbourhood for variable {q}: {row.tolist()}")
        neighbors.setflags(write=False)
        tables.setflags(write=False)
        object.__setattr__(self, "neighbors", neighbors)
        object.__setattr__(self, "tables", tables)
        # row q of `_cols` is (q, neighbours of q); x_q ends up most significant
        cols = np.column_stack([np.arange(self.n), neighbors])
        object.__setattr__(self, "_cols", cols)

    def __eq__(self, other):
        if not isinstance(other, NkInstance):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and self.seed == other.seed
            and np.array_equal(self.neighbors, other.neighbors)
            and np.array_equal(self.tables, other.tables)
        )

    __hash__ = None

    def with_optimum(self):
        """Return a copy carrying the enumerated optimum."""
        value, solution = enumerate_optimum(self)
        return NkInstance(self.n, self.k, self.neighbors, self.tables, self.seed,
                          (value, solution.bits))

    def to_dict(self):
        doc = {
            "n": self.n,
            "k": self.k,
            "seed": self.seed,
            "neighbors": (self.neighbors + 1).tolist(),
            "tables": self.tables.tolist(),
        }
        if self.optimum is not None:
            value, bits = self.optimum
            doc["optimum"] = {"value": float(value), "solution": [int(b) for b in bits]}
        return doc

    @classmethod
    def from_dict(cls, doc):
        optimum = None
        if doc.get("optimum") is not None:
            opt = doc["optimum"]
            optimum = (float(opt["value"]), np.asarray(opt["solution"], dtype=np.uint8))
        return cls(
            n=int(doc["n"]),
            k=int(doc["k"]),
            neighbors=np.asarray(doc["neighbors"], dtype=np.int64) - 1,
            tables=np.asarray(doc["tables"], dtype=np.float64),
            seed=doc.get("seed"),
            optimum=optimum,
        )

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def generate_instance(n, k, seed=None):
    """Draw a random NK-landscape.

    Neighbourhoods are sampled uniformly without replacement from the other
    variables; table entries are i.i.d. uniform on [0, 1). The result is a
    pure function of ``(n, k, seed)``.
    """
    n = check_count(n, "n", 2)
    k = check_count(k, "k", 1)
    if k > n - 1:
        raise ValueError(f"k must be at most n-1={n - 1}, got k={k}")
    rng = np.random.default_rng(seed)
    neighbors = np.empty((n, k), dtype=np.int64)
    for q in range(n):
        others = np.delete(np.arange(n), q)
        neighbors[q] = rng.choice(others, size=k, replace=False)
    tables = rng.random((n, 1 << (k + 1)))
    return NkInstance(n, k, neighbors, tables, seed)


def evaluate_many(inst, X):
    """Fitness of every row of the binary matrix ``X``."""
    X = check_binary_matrix(X, n_features=inst.n, allow_empty=True)
    return _evaluate_unchecked(inst, X)


def _evaluate_unchecked(inst, X):
    cols = inst._cols
    keys = np.zeros((X.shape[0], inst.n), dtype=np.int64)
    for j in range(inst.k + 1):
        keys <<= 1
        keys |= X[:, cols[:, j]]
    contrib = inst.tables[np.arange(inst.n), keys]
    return contrib.sum(axis=1)


def evaluate(inst, x):
    """Return z_NK(x), the plain sum of the N subfunction values."""
    if isinstance(x, Solution):
        x = x.bits
    bits = check_bits(x, inst.n)
    return float(_evaluate_unchecked(inst, bits[None, :])[0])


def enumerate_optimum(inst):
    """Exhaustively maximise ``inst``.

    Returns ``(value, solution)``. Among equal maxima the bitstring with the
    smallest integer value (bit 0 most significant) is returned.
    """
    if inst.n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration refused for n={inst.n} > {MAX_ENUMERATION_N}")
    shifts = np.arange(inst.n - 1, -1, -1, dtype=np.int64)
    best_value = -np.inf
    best_int = 0
    total = 1 << inst.n
    for start in range(0, total, _ENUM_CHUNK):
        ints = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.int64)
        X = ((ints[:, None] >> shifts) & 1).astype(np.uint8)
        values = _evaluate_unchecked(inst, X)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value = float(values[i])
            best_int = int(ints[i])
    bits = ((best_int >> shifts) & 1).astype(np.uint8)
    return best_value, Solution(bits, best_value)


def relative_gap(optimum, best):
    """(optimum - best) / optimum."""
    if optimum <= 0:
        raise ValueError(f"optimum must be positive, got {optimum}")
    if best > optimum + 1e-9 * abs(optimum):
        raise ValueError(f"best ({best}) exceeds optimum ({optimum})")
    return max(0.0, (optimum - best) / optimum)

