"""Commensalistic coevolution of solutions and objective functions.

Each objective function is a weight pair ``[a, b]`` in ``[0, 1]^2``. A
solution's fitness is the best score any current objective function gives
it. Objective functions are scored only by how novel their genomes are, so
their evolution never depends on the solutions population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .evo_core import EvolutionParams, Genome, GenomeTemplate, Individual, RngStreams, evolve_generation
from .novelty import DEFAULT_K, NoveltyArchive, archive_update, knn_novelty, population_novelty
from .trace import RunTrace

__all__ = [
    "OBJECTIVE_TEMPLATE",
    "SafeDomain",
    "Monitor",
    "SafeState",
    "SafeResult",
    "objective_genome",
    "combine_matrix",
    "solution_fitness",
    "solution_fitness_many",
    "objfunc_fitness",
    "objfunc_fitness_many",
    "frozen_objective_params",
    "init_state",
    "reproduce",
    "safe_step",
    "run_safe",
]

OBJECTIVE_TEMPLATE = GenomeTemplate("real", 2, 0.0, 1.0)

TAG_INIT_SOL, TAG_INIT_OBJ, TAG_EVOLVE_SOL, TAG_EVOLVE_OBJ = 21, 22, 23, 24

BASE_COLUMNS = ["generation", "sol_best", "sol_mean", "obj_best", "obj_mean"]


def objective_genome(a: float, b: float) -> Genome:
    return Genome("real", [a, b], 0.0, 1.0)


def combine_matrix(metrics, weights, sign: float = 1.0) -> np.ndarray:
    """``sign * (a * m0 + b * m1)`` for every (solution, objective) pair.

    Written out elementwise rather than as a matrix product so each entry is
    computed exactly as the scalar formula would.
    """
    m = np.asarray(metrics, dtype=float).reshape(-1, 2)
    w = np.asarray(weights, dtype=float).reshape(-1, 2)
    s = m[:, 0, None] * w[None, :, 0] + m[:, 1, None] * w[None, :, 1]
    return s if sign == 1.0 else sign * s


class Monitor:
    """Per-run observer that adds domain columns to the trace."""

    columns: list[str] = []

    def update(self, generation: int, genomes: list[Genome], raw, metrics: np.ndarray) -> dict:
        return {}


class SafeDomain:
    """What SAFE needs from a problem domain.

    ``evaluate`` runs the solutions and returns a raw outcome array plus, for
    domains with phenotypic novelty, an ``(n, d)`` array of behaviour points
    (``None`` otherwise). The engine scores those behaviours for novelty and
    passes the result to ``metrics``, which returns the ``(n, 2)`` metric
    vectors. ``combine`` turns metrics and weight pairs into maximization
    scores.
    """

    solution_template: GenomeTemplate
    uses_behavior = False

    def evaluate(self, genomes: Sequence[Genome], threads: int = 1):
        raise NotImplementedError

    def metrics(self, raw, novelty) -> np.ndarray:
        return np.asarray(raw, dtype=float)

    def combine(self, metrics, weights) -> np.ndarray:
        return combine_matrix(metrics, weights)

    def monitor(self) -> Monitor:
        return Monitor()


def solution_fitness(metrics, objfuncs: Sequence[Genome], domain: SafeDomain) -> tuple[float, int]:
    """Best score over all objective functions, and which one gave it (lowest index on ties)."""
    if not objfuncs:
        raise ValueError("at least one objective function is required")
    w = np.array([g.values for g in objfuncs])
    scores = np.asarray(domain.combine(np.asarray(metrics, dtype=float).reshape(1, -1), w)).ravel()
    j = int(np.argmax(scores))
    return float(scores[j]), j


def solution_fitness_many(metrics, objfuncs: Sequence[Genome], domain: SafeDomain) -> tuple[np.ndarray, np.ndarray]:
    w = np.array([g.values for g in objfuncs])
    scores = np.asarray(domain.combine(metrics, w))
    idx = np.argmax(scores, axis=1)
    return scores[np.arange(len(scores)), idx], idx


def objfunc_fitness(g: Genome, cohort: Sequence[Genome], archive: NoveltyArchive | None, k: int = DEFAULT_K) -> float:
    """Genotypic novelty of one weight pair; ``g`` must not be in ``cohort``."""
    pts = np.array([c.values for c in cohort]).reshape(-1, 2)
    return knn_novelty(g.values, pts, archive, k)


def objfunc_fitness_many(objfuncs: Sequence[Genome], archive: NoveltyArchive | None, k: int = DEFAULT_K) -> np.ndarray:
    return population_novelty(np.array([g.values for g in objfuncs]).reshape(-1, 2), archive, k)


def frozen_objective_params(seed: int, generations: int) -> EvolutionParams:
    """Settings that keep a single objective function fixed for the whole run."""
    return EvolutionParams(
        population_size=1, generations=generations, tournament_size=1,
        crossover_prob=0.0, mutation_rate=0.0, elitism_count=0, seed=seed,
    )


@dataclass
class SafeState:
    generation: int
    solutions: list[Individual]
    objfuncs: list[Individual]
    solution_archive: NoveltyArchive
    objective_archive: NoveltyArchive


@dataclass
class SafeResult:
    trace: RunTrace
    state: SafeState
    monitor: Monitor
    best_solution: Genome | None = None
    best_fitness: float = -math.inf
    extras: dict = field(default_factory=dict)


def init_state(domain: SafeDomain, params_s: EvolutionParams, params_o: EvolutionParams,
               objfuncs: Sequence[Genome] | None = None, k: int = DEFAULT_K) -> SafeState:
    """Random initial populations. ``objfuncs`` overrides the objective population."""
    streams = RngStreams(params_s.seed)
    sols = [Individual(domain.solution_template.random(streams.stream(TAG_INIT_SOL, 0, i)))
            for i in range(params_s.population_size)]
    if objfuncs is None:
        objs = [Individual(OBJECTIVE_TEMPLATE.random(streams.stream(TAG_INIT_OBJ, 0, i)))
                for i in range(params_o.population_size)]
    else:
        objs = [Individual(g) for g in objfuncs]
        if len(objs) != params_o.population_size:
            raise ValueError("objective population does not match params_o.population_size")
    return SafeState(0, sols, objs, NoveltyArchive.empty(2, k), NoveltyArchive.empty(2, k))


def safe_step(state: SafeState, domain: SafeDomain, params_s: EvolutionParams, params_o: EvolutionParams,
              monitor: Monitor | None = None, threads: int = 1, evolve: bool = True) -> tuple[SafeState, dict]:
    """Score one generation, update both archives, then breed the next one.

    Steps, in order: evaluate solutions (metrics, behaviours); score every
    solution with every objective function and keep the max; add the most
    novel behaviour to the solution archive; score objective functions by
    genotypic novelty; add the most novel weight pair to the objective
    archive; reproduce both populations. Returns the new state and a trace
    row describing the generation just scored. With ``evolve=False`` the
    populations are scored but not replaced.
    """
    k = state.objective_archive.k
    genomes = [ind.genome for ind in state.solutions]
    raw, behaviors = domain.evaluate(genomes, threads)

    sol_archive = state.solution_archive
    novelty = None
    if domain.uses_behavior:
        behaviors = np.asarray(behaviors, dtype=float)
        novelty = population_novelty(behaviors, sol_archive, sol_archive.k)
        for ind, b in zip(state.solutions, behaviors):
            ind.behavior = b
    metrics = np.asarray(domain.metrics(raw, novelty), dtype=float)

    fit, _ = solution_fitness_many(metrics, [o.genome for o in state.objfuncs], domain)
    for ind, f in zip(state.solutions, fit):
        ind.fitness = float(f)
    if novelty is not None:
        sol_archive = archive_update(sol_archive, behaviors, novelty)

    obj_nov = objfunc_fitness_many([o.genome for o in state.objfuncs], state.objective_archive, k)
    for ind, f in zip(state.objfuncs, obj_nov):
        ind.fitness = float(f)
    obj_points = np.array([o.genome.values for o in state.objfuncs]).reshape(-1, 2)
    obj_archive = archive_update(state.objective_archive, obj_points, obj_nov)

    of = np.array([o.fitness for o in state.objfuncs])
    row = {
        "generation": state.generation,
        "sol_best": float(fit.max()),
        "sol_mean": math.fsum(fit.tolist()) / len(fit),
        "obj_best": float(of.max()),
        "obj_mean": math.fsum(of.tolist()) / len(of),
    }
    if monitor is not None:
        row.update(monitor.update(state.generation, genomes, raw, metrics))

    scored = SafeState(state.generation, state.solutions, state.objfuncs, sol_archive, obj_archive)
    if not evolve:
        return scored, row
    return reproduce(scored, params_s, params_o), row


def reproduce(state: SafeState, params_s: EvolutionParams, params_o: EvolutionParams) -> SafeState:
    """Breed both scored populations into the next generation."""
    streams = RngStreams(params_s.seed)
    nxt = state.generation + 1
    return SafeState(
        nxt,
        evolve_generation(state.solutions, params_s, streams, nxt, TAG_EVOLVE_SOL),
        evolve_generation(state.objfuncs, params_o, streams, nxt, TAG_EVOLVE_OBJ),
        state.solution_archive,
        state.objective_archive,
    )


def run_safe(domain: SafeDomain, params_s: EvolutionParams, params_o: EvolutionParams,
             objfuncs: Sequence[Genome] | None = None, threads: int = 1, k: int = DEFAULT_K,
             on_generation: Callable[[int, SafeState, dict], None] | None = None) -> SafeResult:
    """Run SAFE for ``params_s.generations`` scored generations."""
    if params_s.generations != params_o.generations:
        raise ValueError("both populations must run the same number of generations")
    monitor = domain.monitor()
    trace = RunTrace(BASE_COLUMNS + list(monitor.columns))
    state = init_state(domain, params_s, params_o, objfuncs, k)
    best, best_fit = None, -math.inf
    for gen in range(params_s.generations):
        state, row = safe_step(state, domain, params_s, params_o, monitor, threads, evolve=False)
        trace.append(row)
        for ind in state.solutions:
            if ind.fitness > best_fit:
                best, best_fit = ind.genome, ind.fitness
        if on_generation is not None:
            on_generation(gen, state, row)
        if gen < params_s.generations - 1:
            state = reproduce(state, params_s, params_o)
    return SafeResult(trace, state, monitor, best, best_fit)
