import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coevo.evo_core import (
    ContractError,
    EvolutionParams,
    Genome,
    GenomeTemplate,
    Individual,
    RngStreams,
    evolve_generation,
    mutate,
    one_point_crossover,
    parallel_map,
    rank_indices,
    tournament_select,
)


def pop_of(fitness, template=GenomeTemplate("real", 4, 0.0, 1.0), seed=0):
    rng = np.random.default_rng(seed)
    return [Individual(template.random(rng), f) for f in fitness]


# --- genomes -----------------------------------------------------------------

def test_genome_values_are_read_only():
    g = Genome.real([0.1, 0.2], 0.0, 1.0)
    with pytest.raises(ValueError):
        g.values[0] = 0.5


def test_genome_requires_bounds_and_valid_kind():
    with pytest.raises(ContractError):
        Genome("real", [0.1])
    with pytest.raises(ContractError):
        Genome("float", [0.1], 0, 1)
    with pytest.raises(ContractError):
        Genome.pairs([1, 2, 3], 0, 5)


def test_bits_from_string_and_equality():
    a = Genome.bits("0110")
    assert a.values.tolist() == [False, True, True, False]
    assert a == Genome.bits([0, 1, 1, 0])
    assert hash(a) == hash(Genome.bits("0110"))
    assert a != Genome.bits("0111")


def test_pairs_have_per_column_bounds():
    g = Genome.pairs([[1, 10], [3, 0]], [1, 0], [4, 255])
    assert g.low.shape == (2, 2)
    assert g.high[:, 1].tolist() == [255, 255]
    assert g.in_bounds()


@pytest.mark.parametrize("kind,low,high", [("bits", None, None), ("real", -2.0, 3.0), ("int", 2, 9), ("pairs", [1, 0], [5, 99])])
def test_template_random_in_bounds(kind, low, high):
    t = GenomeTemplate(kind, 12, low, high)
    rng = np.random.default_rng(3)
    for _ in range(50):
        g = t.random(rng)
        assert g.kind == kind and len(g) == 12 and g.in_bounds()


# --- params --------------------------------------------------------------------

@pytest.mark.parametrize(
    "field,value",
    [
        ("population_size", 0),
        ("tournament_size", 0),
        ("crossover_prob", 1.5),
        ("mutation_rate", 1.5),
        ("mutation_rate", -0.1),
        ("elitism_count", 10),
        ("seed", -1),
    ],
)
def test_params_reject_out_of_range(field, value):
    kw = {"population_size": 10, field: value} if field != "population_size" else {field: value}
    with pytest.raises(ContractError, match=field):
        EvolutionParams(**kw)


def test_params_default_rate_is_one_over_length():
    assert EvolutionParams().rate_for(16) == 1 / 16
    assert EvolutionParams(mutation_rate=0.3).rate_for(16) == 0.3


# --- selection ----------------------------------------------------------------

def test_rank_indices_ties_by_index():
    assert rank_indices([1.0, 3.0, 3.0, 2.0]) == [1, 2, 3, 0]


def test_tournament_full_size_sampling_everything_returns_best():
    pop = pop_of([0.3, 0.9, 0.1, 0.5])
    # find a stream whose k=4 draws touch every index
    for s in range(200):
        rng = RngStreams(0).stream(1, 0, s)
        u = rng.random(4)
        if sorted(min(int(x * 4), 3) for x in u) == [0, 1, 2, 3]:
            assert tournament_select(pop, 4, RngStreams(0).stream(1, 0, s)) is pop[1]
            return
    pytest.fail("no stream sampled every index")


def test_tournament_tie_goes_to_lowest_index():
    pop = pop_of([1.0, 1.0])
    # index 1 can only win when it is drawn twice, so it wins a quarter of the time
    counts = [0, 0]
    rng = np.random.default_rng(1)
    for _ in range(4000):
        counts[0 if tournament_select(pop, 2, rng) is pop[0] else 1] += 1
    assert abs(counts[1] / 4000 - 0.25) < 0.03


def test_tournament_k1_is_uniform_chi_square():
    n = 10
    pop = pop_of(list(range(n)))
    rng = np.random.default_rng(42)
    counts = np.zeros(n)
    index = {id(ind): i for i, ind in enumerate(pop)}
    for _ in range(10000):
        counts[index[id(tournament_select(pop, 1, rng))]] += 1
    chi2 = ((counts - 1000) ** 2 / 1000).sum()
    assert chi2 < 27.88  # 99.9% quantile, 9 degrees of freedom


def test_tournament_contract_errors():
    with pytest.raises(ContractError):
        tournament_select([], 1, np.random.default_rng(0))
    pop = pop_of([1.0, None])
    with pytest.raises(ContractError):
        tournament_select(pop, 1, np.random.default_rng(0))


# --- crossover and mutation ---------------------------------------------------

def test_crossover_forced_last_cut():
    a, b = Genome.bits("0000"), Genome.bits("1111")
    c1, c2 = one_point_crossover(a, b, None, cut=3)
    assert c1 == Genome.bits("0001") and c2 == Genome.bits("1110")


def test_crossover_identical_parents():
    a = Genome.ints([1, 2, 3, 4, 5], 0, 9)
    c1, c2 = one_point_crossover(a, a, np.random.default_rng(0))
    assert c1 == a and c2 == a


def test_crossover_rejects_mismatch():
    with pytest.raises(ContractError):
        one_point_crossover(Genome.bits("01"), Genome.bits("011"), np.random.default_rng(0))
    with pytest.raises(ContractError):
        one_point_crossover(Genome.bits("0"), Genome.bits("1"), np.random.default_rng(0))


@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_crossover_preserves_locus_multisets(n, seed):
    rng = np.random.default_rng(seed)
    a = Genome.ints(rng.integers(0, 9, n), 0, 9)
    b = Genome.ints(rng.integers(0, 9, n), 0, 9)
    c1, c2 = one_point_crossover(a, b, rng)
    for i in range(n):
        assert sorted([c1.values[i], c2.values[i]]) == sorted([a.values[i], b.values[i]])


def test_mutate_rate_zero_and_one():
    rng = np.random.default_rng(0)
    g = Genome.bits("0110")
    assert mutate(g, 0.0, rng) == g
    assert mutate(g, 1.0, rng) == Genome.bits("1001")


def test_mutate_real_clamps_at_upper_bound():
    g = Genome.real([1.0] * 200, 0.0, 1.0)
    m = mutate(g, 1.0, np.random.default_rng(5))
    assert m.values.max() == 1.0
    assert np.all(m.values[m.values < 1.0] >= 0.0)
    # every gene that received positive noise stays exactly at the bound
    assert (m.values == 1.0).sum() > 50


def test_mutate_pairs_touches_one_column_per_pair():
    g = Genome.pairs([[1, 0]] * 300, [1, 0], [1000, 1000])
    m = mutate(g, 1.0, np.random.default_rng(2))
    changed = m.values != g.values
    assert changed.sum(axis=1).max() == 1
    assert changed[:, 0].any() and changed[:, 1].any()


_kinds = st.sampled_from([("bits", None, None), ("real", -1.0, 2.0), ("int", 3, 7), ("pairs", [1, 0], [4, 50])])


@settings(max_examples=60)
@given(_kinds, st.integers(2, 20), st.floats(0, 1), st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_operator_chains_respect_bounds(kind, n, rate, seed, steps):
    k, lo, hi = kind
    t = GenomeTemplate(k, n, lo, hi)
    rng = np.random.default_rng(seed)
    a, b = t.random(rng), t.random(rng)
    for _ in range(steps):
        a, b = one_point_crossover(a, b, rng)
        a, b = mutate(a, rate, rng), mutate(b, rate, rng)
        assert a.in_bounds() and b.in_bounds()
        assert len(a) == n and a.kind == k


# --- generations --------------------------------------------------------------

def _params(**kw):
    base = dict(population_size=20, generations=5, tournament_size=3, seed=7)
    base.update(kw)
    return EvolutionParams(**base)


def test_evolve_keeps_size_and_elites():
    pop = pop_of(np.linspace(0, 1, 20).tolist())
    p = _params(elitism_count=3)
    out = evolve_generation(pop, p, RngStreams(p.seed), 1)
    assert len(out) == 20
    assert [o.genome for o in out[:3]] == [pop[19].genome, pop[18].genome, pop[17].genome]
    assert all(o.fitness is None for o in out)


def test_evolve_max_elitism_leaves_one_child():
    pop = pop_of(np.arange(20.0).tolist())
    p = _params(elitism_count=19, mutation_rate=1.0)
    out = evolve_generation(pop, p, RngStreams(1), 1)
    originals = {ind.genome for ind in pop}
    assert sum(o.genome not in originals for o in out) <= 1


def test_evolve_clone_only_path_is_subset():
    pop = pop_of(np.arange(20.0).tolist())
    p = _params(crossover_prob=0.0, mutation_rate=0.0)
    out = evolve_generation(pop, p, RngStreams(3), 2)
    originals = {ind.genome for ind in pop}
    assert all(o.genome in originals for o in out)


def test_evolve_is_deterministic():
    pop = pop_of(np.arange(20.0).tolist())
    p = _params()
    a = evolve_generation(pop, p, RngStreams(11), 4)
    b = evolve_generation(pop, p, RngStreams(11), 4)
    assert [x.genome for x in a] == [y.genome for y in b]
    c = evolve_generation(pop, p, RngStreams(12), 4)
    assert [x.genome for x in a] != [y.genome for y in c]


def test_evolve_requires_fitness():
    pop = pop_of([1.0, None, 2.0])
    with pytest.raises(ContractError):
        evolve_generation(pop, _params(population_size=3, tournament_size=2), RngStreams(0), 1)


def test_repair_hook_is_applied():
    pop = pop_of(np.arange(20.0).tolist(), GenomeTemplate("int", 5, 0, 9))
    p = _params(mutation_rate=1.0)

    def zero_first(g):
        v = g.values.copy()
        v[0] = 0
        return g.with_values(v)

    out = evolve_generation(pop, p, RngStreams(0), 1, repair=zero_first)
    assert all(o.genome.values[0] == 0 for o in out[1:])


# --- streams and parallel map -----------------------------------------------

def test_streams_are_keyed_and_independent():
    s = RngStreams(5)
    a = s.stream(3, 2, 1).random(4)
    assert np.array_equal(a, RngStreams(5).stream(3, 2, 1).random(4))
    assert not np.array_equal(a, s.stream(3, 2, 2).random(4))
    assert not np.array_equal(a, s.stream(3, 3, 1).random(4))
    assert not np.array_equal(a, RngStreams(6).stream(3, 2, 1).random(4))


def test_sequential_streams_match_fresh_streams():
    s = RngStreams(99)
    for i, rng in s.sequential(4, 9, range(5, 40)):
        ref = s.stream(4, 9, i)
        assert rng.random(3).tolist() == ref.random(3).tolist()
        assert rng.normal(size=2).tolist() == ref.normal(size=2).tolist()
        assert rng.integers(0, 7, 3).tolist() == ref.integers(0, 7, 3).tolist()


def test_stream_key_range_checked():
    with pytest.raises(ContractError):
        RngStreams(0).stream(1 << 16)


def test_parallel_map_preserves_order():
    items = list(range(50))
    assert parallel_map(lambda x: x * x, items, 8) == [x * x for x in items]
