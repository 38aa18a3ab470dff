"""Cooperative coevolution of representations and encodings.

Two populations evolve side by side. A representation is only meaningful
through an encoding, so each individual is scored by pairing it with the top
individuals (representatives) of the other population from the previous
generation and averaging the negated errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .evo_core import (
    EvolutionParams,
    Genome,
    GenomeTemplate,
    Individual,
    RngStreams,
    evolve_generation,
    parallel_map,
    rank_indices,
)
from .trace import RunTrace

__all__ = [
    "OmnirepProblem",
    "PairingError",
    "OmnirepResult",
    "select_representatives",
    "initial_representatives",
    "paired_fitness",
    "coevolve",
    "REPRESENTATION",
    "ENCODING",
]

REPRESENTATION = "representation"
ENCODING = "encoding"

# stream tags
TAG_INIT_REP, TAG_INIT_ENC, TAG_REPS0, TAG_EVOLVE_REP, TAG_EVOLVE_ENC = 11, 12, 13, 14, 15

COLUMNS = ["generation", "rep_best", "rep_mean", "enc_best", "enc_mean", "best_error"]


class OmnirepProblem:
    """Base class for a representation/encoding coupling.

    Subclasses set ``rep_template`` and ``enc_template`` and implement
    :meth:`eval`, which must be deterministic and return an error >= 0.
    """

    rep_template: GenomeTemplate
    enc_template: GenomeTemplate

    def eval(self, representation: Genome, encoding: Genome) -> float:
        raise NotImplementedError

    def repair_representation(self, g: Genome) -> Genome:
        return g

    def repair_encoding(self, g: Genome) -> Genome:
        return g

    def encoding_size(self, g: Genome) -> float:
        """Compactness measure used by the optional parsimony pressure."""
        return 0.0

    def random_representation(self, rng) -> Genome:
        return self.repair_representation(self.rep_template.random(rng))

    def random_encoding(self, rng) -> Genome:
        return self.repair_encoding(self.enc_template.random(rng))


class PairingError(RuntimeError):
    """An evaluation failed; the message names the offending pairing."""


def select_representatives(prev_pop: Sequence[Individual], n: int) -> list[Genome]:
    """Genomes of the ``n`` fittest individuals, best first, ties by index."""
    if len(prev_pop) < n:
        raise ValueError(f"need at least {n} individuals, got {len(prev_pop)}")
    order = rank_indices([ind.fitness for ind in prev_pop])
    return [prev_pop[i].genome for i in order[:n]]


def initial_representatives(pop: Sequence[Individual], n: int, rng: np.random.Generator) -> list[Genome]:
    """Uniform draw without replacement, used before any fitness exists."""
    idx = rng.choice(len(pop), size=min(n, len(pop)), replace=False)
    return [pop[int(i)].genome for i in idx]


def _pair(g: Genome, rep: Genome, side: str) -> tuple[Genome, Genome]:
    if side == REPRESENTATION:
        return g, rep
    if side == ENCODING:
        return rep, g
    raise ValueError(f"side must be {REPRESENTATION!r} or {ENCODING!r}")


def _errors(g, reps, evaluate, side) -> list[float]:
    out = []
    for j, rep in enumerate(reps):
        r, e = _pair(g, rep, side)
        try:
            out.append(float(evaluate(r, e)))
        except Exception as exc:
            raise PairingError(f"evaluating {side} {g!r} with representative #{j} ({rep!r}) failed: {exc}") from exc
    return out


def paired_fitness(g: Genome, reps: Sequence[Genome], problem: OmnirepProblem, side: str) -> float:
    """Mean of the negated errors of ``g`` paired with each representative.

    ``side`` says which argument of ``problem.eval`` the genome fills.
    """
    if not reps:
        raise ValueError("at least one representative is required")
    errs = _errors(g, reps, problem.eval, side)
    return -math.fsum(errs) / len(errs)


@dataclass
class OmnirepResult:
    trace: RunTrace
    best_error: float
    best_representation: Genome
    best_encoding: Genome
    representations: list[Individual]
    encodings: list[Individual]


def coevolve(
    problem: OmnirepProblem,
    params_rep: EvolutionParams,
    params_enc: EvolutionParams,
    n_reps: int = 4,
    threads: int = 1,
    parsimony: float = 0.0,
    on_generation: Callable[[int, "OmnirepResult"], None] | None = None,
) -> OmnirepResult:
    """Run OMNIREP for ``params_rep.generations`` evaluated generations.

    Generation 0 is the random initial populations, scored against randomly
    drawn representatives. Every later generation is bred from the previous
    one and scored against the previous generation's top ``n_reps`` of the
    other population. Both populations are scored before either reproduces.

    ``parsimony`` > 0 subtracts ``parsimony * problem.encoding_size(enc)``
    from encoding fitness (off by default). ``on_generation`` is called after
    every scored generation with a partial result.
    """
    if params_rep.generations != params_enc.generations:
        raise ValueError("both populations must run the same number of generations")
    streams = RngStreams(params_rep.seed)
    n_rep_reps = min(n_reps, params_enc.population_size)
    n_enc_reps = min(n_reps, params_rep.population_size)

    reps = [Individual(problem.random_representation(streams.stream(TAG_INIT_REP, 0, i))) for i in range(params_rep.population_size)]
    encs = [Individual(problem.random_encoding(streams.stream(TAG_INIT_ENC, 0, i))) for i in range(params_enc.population_size)]

    cache: dict[tuple[bytes, bytes], float] = {}

    def evaluate_pairs(pairs):
        todo = []
        seen = set()
        for r, e in pairs:
            key = (r.key(), e.key())
            if key not in cache and key not in seen:
                seen.add(key)
                todo.append((r, e))
        errs = parallel_map(lambda p: float(problem.eval(*p)), todo, threads)
        for (r, e), err in zip(todo, errs):
            cache[(r.key(), e.key())] = err

    def lookup(r, e):
        return cache[(r.key(), e.key())]

    trace = RunTrace(list(COLUMNS))
    best = (math.inf, None, None)
    enc_partners = rep_partners = None

    for gen in range(params_rep.generations):
        if gen == 0:
            enc_partners = initial_representatives(encs, n_rep_reps, streams.stream(TAG_REPS0, 0, 0))
            rep_partners = initial_representatives(reps, n_enc_reps, streams.stream(TAG_REPS0, 0, 1))
        pairs = [(ind.genome, e) for ind in reps for e in enc_partners]
        pairs += [(r, ind.genome) for ind in encs for r in rep_partners]
        try:
            evaluate_pairs(pairs)
        except Exception:
            # re-run serially so the failure carries the pairing that caused it
            for ind in reps:
                _errors(ind.genome, enc_partners, problem.eval, REPRESENTATION)
            for ind in encs:
                _errors(ind.genome, rep_partners, problem.eval, ENCODING)
            raise

        for ind in reps:
            errs = [lookup(ind.genome, e) for e in enc_partners]
            ind.fitness = -math.fsum(errs) / len(errs)
        for ind in encs:
            errs = [lookup(r, ind.genome) for r in rep_partners]
            ind.fitness = -math.fsum(errs) / len(errs)
            if parsimony:
                ind.fitness -= parsimony * problem.encoding_size(ind.genome)

        for r, e in pairs:
            err = lookup(r, e)
            if err < best[0]:
                best = (err, r, e)

        rf = np.array([i.fitness for i in reps])
        ef = np.array([i.fitness for i in encs])
        trace.append(
            {
                "generation": gen,
                "rep_best": float(rf.max()),
                "rep_mean": math.fsum(rf.tolist()) / len(rf),
                "enc_best": float(ef.max()),
                "enc_mean": math.fsum(ef.tolist()) / len(ef),
                "best_error": best[0],
            }
        )
        result = OmnirepResult(trace, best[0], best[1], best[2], reps, encs)
        if on_generation is not None:
            on_generation(gen, result)
        if gen == params_rep.generations - 1:
            break

        # partners for the next generation come from this one
        enc_partners = select_representatives(encs, n_rep_reps)
        rep_partners = select_representatives(reps, n_enc_reps)
        reps = evolve_generation(reps, params_rep, streams, gen + 1, TAG_EVOLVE_REP, problem.repair_representation)
        encs = evolve_generation(encs, params_enc, streams, gen + 1, TAG_EVOLVE_ENC, problem.repair_encoding)

    return result
