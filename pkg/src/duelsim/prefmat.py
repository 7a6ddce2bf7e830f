"""Preference matrices, variation measures, winner notions, and outcome sampling.

A preference matrix holds pairwise win probabilities: entry (a, b) is the
probability that arm a beats arm b in a duel. All matrices satisfy the
complement symmetry p[a, b] + p[b, a] = 1 with a 0.5 diagonal. Arms are
0-indexed throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Mapping

import numpy as np

# Entrywise tolerance for matrix equality and symmetry checks; guards float
# round-trips through files.
EQ_TOL = 1e-12


class PreferenceMatrixError(ValueError):
    """Raised when a matrix violates the preference-matrix invariants."""


@dataclass(frozen=True)
class PreferenceMatrix:
    """K x K matrix of pairwise win probabilities.

    Invariants: 0.5 diagonal, p[i, j] + p[j, i] = 1 entrywise (to EQ_TOL),
    all entries in [0, 1]. Instances are immutable and safe to share.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        validate_entries(p)
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def k(self) -> int:
        return self.p.shape[0]


def validate_entries(p: np.ndarray) -> None:
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise PreferenceMatrixError(f"expected a square matrix, got shape {p.shape}")
    if p.shape[0] < 2:
        raise PreferenceMatrixError("need at least 2 arms")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise PreferenceMatrixError("entries must lie in [0, 1]")
    if np.any(np.abs(np.diagonal(p) - 0.5) > EQ_TOL):
        raise PreferenceMatrixError("diagonal entries must equal 0.5")
    if np.any(np.abs(p + p.T - 1.0) > EQ_TOL):
        raise PreferenceMatrixError("complement symmetry p[i,j] + p[j,i] = 1 violated")


def from_upper_triangle(k: int, entries: Mapping[tuple[int, int], float]) -> PreferenceMatrix:
    """Build a matrix from its strict upper triangle (0-indexed pairs i < j).

    The diagonal is set to 0.5 and the lower triangle to complements. Every
    pair i < j must be provided.
    """
    if k < 2:
        raise PreferenceMatrixError("need at least 2 arms")
    p = np.full((k, k), 0.5)
    seen = set()
    for (i, j), v in entries.items():
        if not (0 <= i < j < k):
            raise PreferenceMatrixError(f"invalid pair ({i}, {j}) for k={k}")
        if not (0.0 <= v <= 1.0):
            raise PreferenceMatrixError(f"entry ({i}, {j}) = {v} outside [0, 1]")
        p[i, j] = v
        p[j, i] = 1.0 - v
        seen.add((i, j))
    expected = k * (k - 1) // 2
    if len(seen) != expected:
        raise PreferenceMatrixError(f"expected {expected} upper-triangle entries, got {len(seen)}")
    return PreferenceMatrix(p)


@lru_cache(maxsize=None)
def _triu_indices(k: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(k, 1)


def fill_from_upper(upper: np.ndarray, k: int) -> np.ndarray:
    """Expand a flat row-major upper-triangle vector to a full matrix array."""
    p = np.full((k, k), 0.5)
    iu = _triu_indices(k)
    p[iu] = upper
    p[(iu[1], iu[0])] = 1.0 - upper
    return p


def upper_triangle_of(p: np.ndarray) -> np.ndarray:
    """Flat row-major strict upper triangle of a matrix array."""
    return p[_triu_indices(p.shape[0])]


@dataclass
class SequenceMeta:
    """Generator provenance and realized non-stationarity of a sequence."""

    generator: str | None = None
    seed: int | None = None
    sigma: float | None = None
    s_declared: int | None = None
    v_declared: float | None = None
    s_realized: int | None = None
    v_realized: float | None = None
    # Segment boundaries T_1..T_{S+1} as 0-based round indices with an
    # exclusive end, i.e. boundaries[0] = 0 and boundaries[-1] = T.
    boundaries: list[int] | None = None
    # Per-segment planted winners (lower-bound instances only).
    winners: list[int] | None = None
    epsilon: float | None = None

    def validate(self, t_horizon: int) -> None:
        if self.boundaries is not None:
            b = self.boundaries
            if b[0] != 0 or b[-1] != t_horizon:
                raise PreferenceMatrixError("boundaries must start at 0 and end at T")
            if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
                raise PreferenceMatrixError("boundaries must be strictly increasing")


class PreferenceSequence:
    """A T-round sequence of preference matrices, materialized or lazy.

    Lazy sequences are backed by a factory returning a fresh iterator of
    K x K arrays, so repeated passes regenerate identical matrices from the
    seed without holding more than one matrix in memory.
    """

    def __init__(
        self,
        k: int,
        t_horizon: int,
        matrices: list[np.ndarray] | None = None,
        factory: Callable[[], Iterator[np.ndarray]] | None = None,
        meta: SequenceMeta | None = None,
    ):
        if t_horizon < 1:
            raise PreferenceMatrixError("t_horizon must be >= 1")
        if (matrices is None) == (factory is None):
            raise PreferenceMatrixError("provide exactly one of matrices or factory")
        if matrices is not None:
            if len(matrices) != t_horizon:
                raise PreferenceMatrixError("matrix count must equal t_horizon")
            for m in matrices:
                if m.shape != (k, k):
                    raise PreferenceMatrixError("all matrices must share the same K")
        self.k = k
        self.t_horizon = t_horizon
        self._matrices = matrices
        self._factory = factory
        self.meta = meta if meta is not None else SequenceMeta()
        self.meta.validate(t_horizon)

    def iter_arrays(self) -> Iterator[np.ndarray]:
        """Yield the T raw matrix arrays in round order."""
        if self._matrices is not None:
            yield from self._matrices
        else:
            count = 0
            for m in self._factory():
                if m.shape != (self.k, self.k):
                    raise PreferenceMatrixError("all matrices must share the same K")
                yield m
                count += 1
            if count != self.t_horizon:
                raise PreferenceMatrixError("factory yielded wrong number of matrices")

    def __iter__(self) -> Iterator[PreferenceMatrix]:
        for m in self.iter_arrays():
            yield PreferenceMatrix(m)

    def materialize(self) -> "PreferenceSequence":
        """Return an equivalent sequence with all matrices stored in memory."""
        if self._matrices is not None:
            return self
        mats = [m.copy() for m in self.iter_arrays()]
        return PreferenceSequence(self.k, self.t_horizon, matrices=mats, meta=self.meta)


def switching_variation(seq: PreferenceSequence) -> int:
    """Count of rounds t >= 2 where the matrix changed (beyond EQ_TOL)."""
    count = 0
    prev = None
    for m in seq.iter_arrays():
        if prev is not None and np.max(np.abs(m - prev)) > EQ_TOL:
            count += 1
        prev = m.copy()
    return count


def continuous_variation(seq: PreferenceSequence) -> float:
    """Sum over t >= 2 of the max-entry absolute change between rounds."""
    total = 0.0
    prev = None
    for m in seq.iter_arrays():
        if prev is not None:
            total += float(np.max(np.abs(m - prev)))
        prev = m.copy()
    return total


def condorcet_winner(m: PreferenceMatrix) -> int | None:
    """The arm strictly beating all others, or None. Unique when it exists."""
    p = m.p
    for i in range(m.k):
        row = np.delete(p[i], i)
        if np.all(row > 0.5):
            return i
    return None


def borda_scores(m: PreferenceMatrix, shifted: bool = False) -> np.ndarray:
    """Per-arm average win probability.

    Unshifted: mean of p[i, j] over the K-1 opponents j != i. Shifted: mean
    over all K columns including the 0.5 self-duel. The two are linked by
    (K-1) * b + 0.5 = K * s.
    """
    p = m.p
    if shifted:
        return p.sum(axis=1) / m.k
    return (p.sum(axis=1) - 0.5) / (m.k - 1)


def sample_outcome(m: PreferenceMatrix | np.ndarray, a: int, b: int, rng: np.random.Generator) -> int:
    """Draw the duel outcome: 1 with probability p[a, b]. Consumes one draw."""
    p = m.p if isinstance(m, PreferenceMatrix) else m
    k = p.shape[0]
    if not (0 <= a < k and 0 <= b < k):
        raise IndexError(f"arm index out of range for k={k}")
    return int(rng.random() < p[a, b])


def sequence_to_json(seq: PreferenceSequence, include_matrices: bool | None = None) -> str:
    """Serialize a sequence to JSON.

    Matrices (as row-major upper triangles) are included unless the sequence
    is regenerable from (generator, seed).
    """
    meta = seq.meta
    if include_matrices is None:
        include_matrices = meta.generator is None or meta.seed is None
    doc: dict = {
        "k": seq.k,
        "t_horizon": seq.t_horizon,
        "generator": meta.generator,
        "seed": meta.seed,
        "meta": {
            "sigma": meta.sigma,
            "s_declared": meta.s_declared,
            "v_declared": meta.v_declared,
            "s_realized": meta.s_realized,
            "v_realized": meta.v_realized,
            "boundaries": meta.boundaries,
            "winners": meta.winners,
            "epsilon": meta.epsilon,
        },
    }
    if include_matrices:
        doc["matrices"] = [upper_triangle_of(m).tolist() for m in seq.iter_arrays()]
    return json.dumps(doc)


def sequence_from_json(text: str) -> PreferenceSequence:
    """Inverse of sequence_to_json; regenerates lazily when matrices are omitted."""
    doc = json.loads(text)
    k = doc["k"]
    t = doc["t_horizon"]
    md = doc.get("meta") or {}
    meta = SequenceMeta(
        generator=doc.get("generator"),
        seed=doc.get("seed"),
        sigma=md.get("sigma"),
        s_declared=md.get("s_declared"),
        v_declared=md.get("v_declared"),
        s_realized=md.get("s_realized"),
        v_realized=md.get("v_realized"),
        boundaries=md.get("boundaries"),
        winners=md.get("winners"),
        epsilon=md.get("epsilon"),
    )
    if "matrices" in doc and doc["matrices"] is not None:
        mats = [fill_from_upper(np.asarray(u, dtype=np.float64), k) for u in doc["matrices"]]
        return PreferenceSequence(k, t, matrices=mats, meta=meta)
    # Regenerate lazily from the recorded generator spec.
    from . import envgen

    spec = envgen.EnvSpec(
        kind=meta.generator,
        k=k,
        t_horizon=t,
        seed=meta.seed,
        sigma=meta.sigma,
        s_switches=meta.s_declared,
        v_budget=meta.v_declared,
        epsilon=meta.epsilon,
    )
    return envgen.generate(spec)


def matrix_to_csv(m: PreferenceMatrix) -> str:
    """CSV export: header "i,j,p", one row per ordered pair (0-indexed)."""
    lines = ["i,j,p"]
    for i in range(m.k):
        for j in range(m.k):
            lines.append(f"{i},{j},{float(m.p[i, j])!r}")
    return "\n".join(lines) + "\n"
