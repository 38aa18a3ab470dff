import math

import numpy as np
import pytest

from coevo.evo_core import EvolutionParams, Genome, GenomeTemplate, Individual
from coevo.omnirep import (
    ENCODING,
    REPRESENTATION,
    OmnirepProblem,
    PairingError,
    coevolve,
    initial_representatives,
    paired_fitness,
    select_representatives,
)
from coevo.omnirep_problems import BitCountProblem, ProgramProblem


class TableProblem(OmnirepProblem):
    """eval = |r - e| on single integers; easy to reason about."""

    rep_template = GenomeTemplate("int", 2, 0, 9)
    enc_template = GenomeTemplate("int", 2, 0, 9)

    def __init__(self):
        self.calls = []

    def eval(self, r, e):
        self.calls.append((tuple(r.values), tuple(e.values)))
        return float(abs(int(r.values.sum()) - int(e.values.sum())))


def ints(*v):
    return Genome.ints(list(v), 0, 9)


def test_select_representatives_top_n_and_ties():
    pop = [Individual(ints(i, 0), f) for i, f in enumerate([5, 4, 3, 2, 1])]
    assert select_representatives(pop, 4) == [ints(0, 0), ints(1, 0), ints(2, 0), ints(3, 0)]
    same = [Individual(ints(i, 0), 1.0) for i in range(6)]
    assert select_representatives(same, 3) == [ints(0, 0), ints(1, 0), ints(2, 0)]
    mixed = [Individual(ints(i, 0), f) for i, f in enumerate([1, 3, 2])]
    assert select_representatives(mixed, 3) == [ints(1, 0), ints(2, 0), ints(0, 0)]
    with pytest.raises(ValueError):
        select_representatives(pop, 6)


def test_initial_representatives_distinct_draws():
    pop = [Individual(ints(i, 0)) for i in range(10)]
    reps = initial_representatives(pop, 4, np.random.default_rng(0))
    assert len(reps) == 4 and len(set(reps)) == 4


class ListProblem(OmnirepProblem):
    def __init__(self, errors):
        self.errors = errors

    def eval(self, r, e):
        return self.errors[int(e.values[0])]


def test_paired_fitness_examples():
    p = ListProblem([0.0, 2.0, 4.0, 6.0])
    reps = [ints(i, 0) for i in range(4)]
    assert paired_fitness(ints(0, 0), reps, p, REPRESENTATION) == -3.0
    assert paired_fitness(ints(0, 0), [ints(2, 0)] * 4, p, REPRESENTATION) == -4.0
    assert paired_fitness(ints(0, 0), [ints(0, 0)] * 3, p, REPRESENTATION) == 0.0


def test_paired_fitness_slots_the_side():
    p = TableProblem()
    paired_fitness(ints(1, 1), [ints(3, 3)], p, REPRESENTATION)
    paired_fitness(ints(1, 1), [ints(3, 3)], p, ENCODING)
    assert p.calls == [((1, 1), (3, 3)), ((3, 3), (1, 1))]
    with pytest.raises(ValueError):
        paired_fitness(ints(1, 1), [], p, REPRESENTATION)


def test_pairing_error_names_the_pair():
    class Broken(TableProblem):
        def eval(self, r, e):
            raise ZeroDivisionError("boom")

    with pytest.raises(PairingError, match="representative #0"):
        paired_fitness(ints(1, 2), [ints(3, 4)], Broken(), ENCODING)
    params = EvolutionParams(population_size=6, generations=2, tournament_size=2)
    with pytest.raises(PairingError, match="boom"):
        coevolve(Broken(), params, params)


def _params(n=30, g=15, **kw):
    return EvolutionParams(population_size=n, generations=g, tournament_size=3, seed=kw.pop("seed", 3), **kw)


def test_one_generation_gives_one_row():
    res = coevolve(TableProblem(), _params(g=1), _params(g=1))
    assert len(res.trace) == 1
    assert res.trace.rows[0]["generation"] == 0


def test_trace_columns_and_determinism():
    a = coevolve(TableProblem(), _params(), _params())
    b = coevolve(TableProblem(), _params(), _params())
    assert a.trace.to_csv() == b.trace.to_csv()
    assert a.trace.columns == ["generation", "rep_best", "rep_mean", "enc_best", "enc_mean", "best_error"]
    assert a.trace.column("generation").tolist() == list(range(15))


def test_threads_do_not_change_results():
    p = BitCountProblem.random(np.random.default_rng(2))
    a = coevolve(p, _params(g=6), _params(g=6), threads=1)
    b = coevolve(p, _params(g=6), _params(g=6), threads=4)
    assert a.trace.to_csv() == b.trace.to_csv()


def test_best_error_non_increasing_and_consistent():
    p = BitCountProblem.random(np.random.default_rng(9))
    res = coevolve(p, _params(g=25, elitism_count=2), _params(g=25, elitism_count=2))
    be = res.trace.column("best_error")
    assert np.all(np.diff(be) <= 0)
    assert p.eval(res.best_representation, res.best_encoding) == res.best_error


def test_populations_keep_their_genome_kind():
    p = ProgramProblem.random(np.random.default_rng(1))
    seen = []

    def watch(gen, res):
        seen.append(({i.genome.kind for i in res.representations}, {i.genome.kind for i in res.encodings},
                     {len(i.genome) for i in res.representations}, {len(i.genome) for i in res.encodings}))

    coevolve(p, _params(g=5), _params(g=5), on_generation=watch)
    assert all(s == ({"int"}, {"int"}, {10}, {5}) for s in seen)


def test_parsimony_penalizes_encoding_size():
    class Sized(TableProblem):
        def encoding_size(self, g):
            return float(g.values.sum())

    base = coevolve(Sized(), _params(g=1), _params(g=1))
    pen = coevolve(Sized(), _params(g=1), _params(g=1), parsimony=0.5)
    for a, b in zip(base.encodings, pen.encodings):
        assert math.isclose(b.fitness, a.fitness - 0.5 * a.genome.values.sum())
