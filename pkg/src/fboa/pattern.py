"""Aggregate per-run SHD vectors into a model-update probability schedule."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

GAP = np.nan


@dataclass(frozen=True, eq=False)
class UpdatePattern:
    """Probabilities ``p_1..p_L`` of rebuilding the model at iteration t."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).ravel()
        if p.size == 0:
            raise ValueError("an update pattern needs at least one entry")
        if not np.all((p >= 0.0) & (p <= 1.0)):
            raise ValueError("pattern probabilities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return self.p.size

    def __eq__(self, other):
        if not isinstance(other, UpdatePattern):
            return NotImplemented
        return np.array_equal(self.p, other.p)

    __hash__ = None

    def at(self, t):
        """p_t for a 1-based iteration; iterations past L reuse p_L."""
        if t < 1:
            raise ValueError(f"iterations are 1-based, got {t}")
        return float(self.p[min(t, self.p.size) - 1])

    def cumulative(self, iterations):
        """Sum of p_1..p_iterations with the same clamping as :meth:`at`."""
        if iterations <= 0:
            return 0.0
        head = self.p[: min(iterations, self.p.size)].sum()
        tail = max(0, iterations - self.p.size) * self.p[-1]
        return float(head + tail)

    @classmethod
    def constant(cls, value, length=1):
        return cls(np.full(length, float(value)))

    def dumps(self):
        lines = [str(self.p.size)] + [repr(float(v)) for v in self.p]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty pattern file")
        length = int(lines[0])
        values = [float(v) for v in lines[1:]]
        if len(values) != length:
            raise ValueError(f"pattern header says {length} values, found {len(values)}")
        return cls(np.array(values))

    def dump(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def default_pattern():
    """The schedule shipped with the package, extracted from N=18 BOA runs."""
    text = resources.files("fboa").joinpath("data/default_pattern.txt").read_text(encoding="utf-8")
    return UpdatePattern.loads(text)


def gap_positions(length, target_len):
    """Slots receiving gap markers when stretching ``length`` values to ``target_len``."""
    n_gaps = target_len - length
    taken = np.zeros(target_len, dtype=bool)
    for i in range(n_gaps):
        pos = int(np.floor((i + 0.5) * target_len / n_gaps))
        pos = min(pos, target_len - 1)
        if taken[pos]:
            free = np.flatnonzero(~taken)
            right = free[free > pos]
            pos = int(right[0]) if right.size else int(free[0])
        taken[pos] = True
    return np.flatnonzero(taken)


def pad_uniform(values, target_len):
    """Spread ``target_len - len(values)`` gap markers evenly through ``values``.

    Returns a float array of length ``target_len`` with ``nan`` in the gap
    slots and the original values, in order, everywhere else.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size > target_len:
        raise ValueError(f"vector of length {values.size} exceeds target length {target_len}")
    row = np.full(target_len, GAP)
    mask = np.ones(target_len, dtype=bool)
    mask[gap_positions(values.size, target_len)] = False
    row[mask] = values
    return row


def padded_matrix(vectors):
    vectors = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    if not vectors:
        raise ValueError("at least one SHD vector is required")
    if any(v.size == 0 for v in vectors):
        raise ValueError("SHD vectors must be non-empty")
    if any((v < 0).any() for v in vectors):
        raise ValueError("SHD values must be nonnegative")
    width = max(v.size for v in vectors)
    return np.vstack([pad_uniform(v, width) for v in vectors])


def column_means(vectors):
    """Mean of each padded column over its non-gap entries (0 for all-gap columns)."""
    M = padded_matrix(vectors)
    present = ~np.isnan(M)
    counts = present.sum(axis=0)
    sums = np.where(present, M, 0.0).sum(axis=0)
    return np.divide(sums, counts, out=np.zeros(M.shape[1]), where=counts > 0)


def aggregate(vectors):
    """Build the normalised update pattern from per-run SHD vectors."""
    means = column_means(vectors)
    top = means.max()
    if top <= 0:
        return UpdatePattern(np.zeros_like(means))
    return UpdatePattern(np.clip(means / top, 0.0, 1.0))
