"""Single-population evolutionary machinery shared by both coevolution engines.

Everything here is written for maximization. Genomes are immutable values; an
operator always returns a fresh genome. Randomness comes from
:class:`RngStreams`, which hands out one independent generator per
``(purpose, generation, index)`` key so results never depend on evaluation
order or thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

import numpy as np

__all__ = [
    "ContractError",
    "Genome",
    "GenomeTemplate",
    "Individual",
    "EvolutionParams",
    "RngStreams",
    "rank_indices",
    "tournament_select",
    "one_point_crossover",
    "mutate",
    "evolve_generation",
    "parallel_map",
]

KINDS = ("bits", "real", "int", "pairs")

T = TypeVar("T")
R = TypeVar("R")


class ContractError(ValueError):
    """Raised when a caller breaks an operation's precondition."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class Genome:
    """Fixed-length genome with per-gene closed bounds.

    ``kind`` is one of ``"bits"``, ``"real"``, ``"int"`` or ``"pairs"``. For
    ``"pairs"`` the values have shape ``(n, 2)`` and each column has its own
    bounds; everything else is one-dimensional. Bit strings carry no bounds.
    """

    __slots__ = ("kind", "values", "low", "high", "_key")

    def __init__(self, kind, values, low=None, high=None):
        if kind not in KINDS:
            raise ContractError(f"unknown genome kind {kind!r}")
        if kind == "bits":
            values = np.array(values, dtype=bool)
        elif kind == "real":
            values = np.array(values, dtype=float)
        else:
            values = np.array(values, dtype=np.int64)
        if kind == "pairs" and (values.ndim != 2 or values.shape[1] != 2):
            raise ContractError("pair genome needs shape (n, 2)")
        if kind != "pairs" and values.ndim != 1:
            raise ContractError(f"{kind} genome must be one-dimensional")
        self.kind = kind
        self.values = _frozen(values)
        if kind == "bits":
            self.low = self.high = None
        else:
            if low is None or high is None:
                raise ContractError(f"{kind} genome requires bounds")
            dtype = float if kind == "real" else np.int64
            self.low = _frozen(np.broadcast_to(np.asarray(low, dtype=dtype), values.shape).copy())
            self.high = _frozen(np.broadcast_to(np.asarray(high, dtype=dtype), values.shape).copy())
            if np.any(self.low > self.high):
                raise ContractError("lower bound exceeds upper bound")
        self._key = None

    # convenience constructors
    @classmethod
    def bits(cls, values) -> "Genome":
        if isinstance(values, str):
            values = [c == "1" for c in values]
        return cls("bits", values)

    @classmethod
    def real(cls, values, low, high) -> "Genome":
        return cls("real", values, low, high)

    @classmethod
    def ints(cls, values, low, high) -> "Genome":
        return cls("int", values, low, high)

    @classmethod
    def pairs(cls, values, low, high) -> "Genome":
        return cls("pairs", values, low, high)

    def __len__(self) -> int:
        return self.values.shape[0]

    def with_values(self, values) -> "Genome":
        """Same kind and bounds, new gene values (not re-validated against bounds)."""
        g = object.__new__(Genome)
        g.kind, g.low, g.high, g._key = self.kind, self.low, self.high, None
        v = np.array(values, dtype=self.values.dtype)
        if v.shape != self.values.shape:
            raise ContractError(f"expected shape {self.values.shape}, got {v.shape}")
        g.values = _frozen(v)
        return g

    def in_bounds(self) -> bool:
        if self.kind == "bits":
            return True
        return bool(np.all(self.values >= self.low) and np.all(self.values <= self.high))

    def key(self) -> bytes:
        """Hashable byte key identifying the gene values."""
        if self._key is None:
            self._key = self.kind.encode() + self.values.tobytes()
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self.kind == other.kind and self.values.shape == other.values.shape and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        if self.kind == "bits":
            return f"Genome.bits({''.join('1' if b else '0' for b in self.values)!r})"
        return f"Genome({self.kind!r}, {self.values.tolist()!r})"


@dataclass(frozen=True)
class GenomeTemplate:
    """Shape and bounds of the genomes a population holds."""

    kind: str
    length: int
    low: object = None
    high: object = None

    def random(self, rng: np.random.Generator) -> Genome:
        shape = (self.length, 2) if self.kind == "pairs" else (self.length,)
        if self.kind == "bits":
            return Genome("bits", rng.random(self.length) < 0.5)
        low = np.broadcast_to(np.asarray(self.low), shape)
        high = np.broadcast_to(np.asarray(self.high), shape)
        if self.kind == "real":
            vals = low + rng.random(shape) * (high - low)
            return Genome("real", np.clip(vals, low, high), low, high)
        vals = rng.integers(low, high, size=shape, endpoint=True)
        return Genome(self.kind, vals, low, high)


@dataclass
class Individual:
    genome: Genome
    fitness: float | None = None
    behavior: np.ndarray | None = None


@dataclass(frozen=True)
class EvolutionParams:
    """Per-population GA settings.

    ``mutation_rate=None`` means one expected mutation per genome (1/len).
    """

    population_size: int = 100
    generations: int = 200
    tournament_size: int = 5
    crossover_prob: float = 0.8
    mutation_rate: float | None = None
    elitism_count: int = 1
    seed: int = 0

    def __post_init__(self):
        def bad(name, why):
            raise ContractError(f"{name}: {why} (got {getattr(self, name)!r})")

        for name in ("population_size", "generations", "tournament_size"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                bad(name, "must be a positive integer")
        if not isinstance(self.elitism_count, (int, np.integer)) or self.elitism_count < 0:
            bad("elitism_count", "must be a non-negative integer")
        if self.elitism_count >= self.population_size:
            bad("elitism_count", "must be smaller than population_size")
        if self.tournament_size > self.population_size:
            bad("tournament_size", "must not exceed population_size")
        if not 0.0 <= self.crossover_prob <= 1.0:
            bad("crossover_prob", "must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            bad("mutation_rate", "must lie in [0, 1]")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            bad("seed", "must be an unsigned 64-bit integer")

    def rate_for(self, genome_length: int) -> float:
        if self.mutation_rate is not None:
            return float(self.mutation_rate)
        return 1.0 / max(genome_length, 1)


class RngStreams:
    """Derives independent generators from ``(seed, tag, generation, index)``.

    Each key maps to its own Philox counter-based stream, so drawing from one
    stream never perturbs another. ``tag`` < 2**16, ``generation`` and
    ``index`` < 2**24.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def stream(self, tag: int, generation: int = 0, index: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, self._word(tag, generation, index)]))

    @staticmethod
    def _word(tag: int, generation: int, index: int) -> int:
        if not (0 <= tag < 1 << 16 and 0 <= generation < 1 << 24 and 0 <= index < 1 << 24):
            raise ContractError(f"stream key out of range: {(tag, generation, index)}")
        return (tag << 48) | (generation << 24) | index

    def sequential(self, tag: int, generation: int, indices: Iterable[int]) -> Iterator[tuple[int, np.random.Generator]]:
        """Yield ``(i, stream(tag, generation, i))`` for each index.

        One generator object is rewound in place for every index, which is
        several times cheaper than building a fresh one. Each yielded stream
        is only valid until the next iteration step.
        """
        bitgen = np.random.Philox(key=[self.seed, 0])
        gen = np.random.Generator(bitgen)
        state = bitgen.state
        for i in indices:
            state["state"]["counter"][:] = 0
            state["state"]["key"][:] = (self.seed, self._word(tag, generation, i))
            state["buffer"][:] = 0
            state["buffer_pos"] = 4
            state["has_uint32"] = 0
            state["uinteger"] = 0
            bitgen.state = state
            yield i, gen


def rank_indices(fitness: Sequence[float]) -> list[int]:
    """Indices ordered best-first; equal fitness keeps the lower index first."""
    f = np.asarray(fitness, dtype=float)
    # lexsort: last key is primary
    return np.lexsort((np.arange(len(f)), -f)).tolist()


def _fitness_array(pop: Sequence[Individual]) -> np.ndarray:
    if not pop:
        raise ContractError("population is empty")
    if any(ind.fitness is None for ind in pop):
        raise ContractError("fitness must be set on every individual before selection")
    return np.array([ind.fitness for ind in pop], dtype=float)


def _tournament_index(fitness: list[float], k: int, rng: np.random.Generator) -> int:
    # floor(u * n) is uniform on 0..n-1 and much cheaper than rng.integers for tiny draws
    n = len(fitness)
    drawn = [min(int(u * n), n - 1) for u in rng.random(k).tolist()]
    best = drawn[0]
    for i in drawn[1:]:
        if fitness[i] > fitness[best] or (fitness[i] == fitness[best] and i < best):
            best = i
    return best


def tournament_select(pop: Sequence[Individual], k: int, rng: np.random.Generator) -> Individual:
    """Best of ``k`` uniform draws with replacement; ties go to the lowest index."""
    fitness = _fitness_array(pop)
    if not 1 <= k <= len(pop):
        raise ContractError(f"tournament size {k} outside 1..{len(pop)}")
    return pop[_tournament_index(fitness.tolist(), k, rng)]


def _check_compatible(a: Genome, b: Genome):
    if a.kind != b.kind or a.values.shape != b.values.shape:
        raise ContractError(f"cannot cross {a.kind}{a.values.shape} with {b.kind}{b.values.shape}")


def one_point_crossover(a: Genome, b: Genome, rng: np.random.Generator, cut: int | None = None) -> tuple[Genome, Genome]:
    """Swap suffixes at a cut drawn uniformly from ``1..len-1``.

    ``cut`` may be given explicitly (tests, or callers that drew it already).
    """
    _check_compatible(a, b)
    n = len(a)
    if n < 2:
        raise ContractError("crossover needs genomes of length >= 2")
    c = int(rng.integers(1, n)) if cut is None else int(cut)
    if not 1 <= c <= n - 1:
        raise ContractError(f"cut point {c} outside 1..{n - 1}")
    va, vb = a.values, b.values
    child1 = np.concatenate([va[:c], vb[c:]])
    child2 = np.concatenate([vb[:c], va[c:]])
    return a.with_values(child1), b.with_values(child2)


def mutate(g: Genome, rate: float, rng: np.random.Generator) -> Genome:
    """Per-gene mutation with probability ``rate``.

    Bits flip; reals get Gaussian noise with sigma = 10% of the bound width
    and are clamped; ints are resampled uniformly in bounds; a pair has one
    of its two elements (chosen uniformly) resampled in that element's bounds.
    """
    if not 0.0 <= rate <= 1.0:
        raise ContractError(f"mutation rate {rate} outside [0, 1]")
    n = len(g)
    hit = rng.random(n) < rate
    if not hit.any():
        return g
    if g.kind == "bits":
        return g.with_values(g.values ^ hit)
    if g.kind == "real":
        noise = rng.normal(0.0, 1.0, n) * (0.1 * (g.high - g.low))
        vals = np.where(hit, np.clip(g.values + noise, g.low, g.high), g.values)
        return g.with_values(vals)
    if g.kind == "int":
        fresh = rng.integers(g.low, g.high, endpoint=True)
        return g.with_values(np.where(hit, fresh, g.values))
    # pairs
    col = rng.integers(0, 2, size=n)
    rows = np.arange(n)
    fresh = rng.integers(g.low[rows, col], g.high[rows, col], endpoint=True)
    vals = g.values.copy()
    vals[rows[hit], col[hit]] = fresh[hit]
    return g.with_values(vals)


def evolve_generation(
    pop: Sequence[Individual],
    params: EvolutionParams,
    streams: RngStreams,
    generation: int,
    tag: int = 0,
    repair: Callable[[Genome], Genome] | None = None,
) -> list[Individual]:
    """Produce the next population.

    The ``elitism_count`` fittest genomes are carried over first, in rank
    order. Child ``i`` is bred entirely from ``streams.stream(tag, generation, i)``:
    two tournaments, one-point crossover with ``crossover_prob`` (first child
    kept) or a clone of the first parent, then mutation and optional repair.
    All returned individuals have ``fitness=None``.
    """
    fitness = _fitness_array(pop)
    n = len(pop)
    order = rank_indices(fitness)
    fitness = fitness.tolist()
    out = [Individual(pop[i].genome) for i in order[: params.elitism_count]]
    rate = params.rate_for(len(pop[0].genome))
    k = min(params.tournament_size, n)
    for i, rng in streams.sequential(tag, generation, range(len(out), n)):
        a = pop[_tournament_index(fitness, k, rng)].genome
        b = pop[_tournament_index(fitness, k, rng)].genome
        if rng.random() < params.crossover_prob and len(a) >= 2:
            child, _ = one_point_crossover(a, b, rng)
        else:
            child = a
        child = mutate(child, rate, rng)
        if repair is not None:
            child = repair(child)
        out.append(Individual(child))
    return out


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Ordered map, optionally on a thread pool. Output order never depends on ``threads``."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
