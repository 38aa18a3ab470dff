"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Seeds 0..N-1 are used throughout; tuning was done on other seeds.
"""

import time

import numpy as np
import pytest

from acceptance_report import record
from oracles import nondominated_bruteforce, novelty_bruteforce, zdt_oracle

from coevo.evo_core import Individual
from coevo.harness import build_problem, parse_config, population_params, run_experiment
from coevo.moo import ParetoArchive, ZdtProblem, zdt_eval_many
from coevo.novelty import NoveltyArchive, knn_novelty
from coevo.safe import frozen_objective_params, init_state, objective_genome, run_safe, safe_step


def test_01_novelty_oracle_equivalence():
    rng = np.random.default_rng(1)
    t = time.perf_counter()
    bad = 0
    for _ in range(1000):
        k = int(rng.choice([1, 5, 15]))
        n = int(rng.integers(1, 201))
        na = int(rng.integers(0, n + 1))
        pts = rng.uniform(-10, 10, size=(n, 2))
        cohort, arch = pts[na:], pts[:na]
        p = rng.uniform(-10, 10, size=2)
        got = knn_novelty(p, cohort, NoveltyArchive(arch, k), k)
        bad += got != novelty_bruteforce(p.tolist(), cohort.tolist(), arch.tolist(), k)
    dt = time.perf_counter() - t
    ok = record(1, "novelty oracle", bad == 0 and dt < 5, f"{1000 - bad}/1000 exact, {dt:.2f}s (< 5s)")
    assert ok


def test_02_zdt_oracle():
    t = time.perf_counter()
    worst = 0.0
    for pid in (1, 2, 3, 4):
        for form in ("standard", "verbatim"):
            p = ZdtProblem(pid, form=form)
            x = np.random.default_rng(pid).uniform(p.low, p.high, size=(100, p.k))
            got = zdt_eval_many(p, x)
            for row, xi in zip(got, x):
                ref = zdt_oracle(pid, xi.tolist(), form)
                worst = max(worst, *(abs(a - b) / max(1.0, abs(b)) for a, b in zip(row, ref)))
    dt = time.perf_counter() - t
    ok = record(2, "ZDT oracle", worst <= 1e-12 and dt < 1, f"max rel. error {worst:.1e} (<= 1e-12), {dt:.2f}s (< 1s)")
    assert ok


def test_03_pareto_archive_bruteforce():
    rng = np.random.default_rng(3)
    t = time.perf_counter()
    same = 0
    for trial in range(50):
        # coarse grid values make ties and duplicates common
        pts = rng.integers(0, 40, size=(500, 2)).astype(float) / 4 if trial % 2 else rng.random((500, 2))
        a = ParetoArchive()
        for q in pts:
            a.insert(q)
        same += {tuple(q) for q in a.points.tolist()} == nondominated_bruteforce(pts.tolist())
    dt = time.perf_counter() - t
    ok = record(3, "Pareto archive", same == 50 and dt < 5, f"{same}/50 identical sets, {dt:.2f}s (< 5s)")
    assert ok


@pytest.mark.slow
def test_04_safe_zdt1_igd():
    t = time.perf_counter()
    vals = []
    for seed in range(10):
        cfg = parse_config({"algorithm": "safe", "problem": "zdt", "seed": seed, "generations": 200,
                            "population_size": 250, "secondary": {"population_size": 25},
                            "problem_options": {"id": 1, "k": 30, "form": "standard", "reference_points": 1000}})
        vals.append(run_experiment(cfg, write=False).trace.column("igd")[-1])
    dt = time.perf_counter() - t
    med = float(np.median(vals))
    ok = record(4, "SAFE ZDT1 IGD", med <= 0.05 and dt < 120, f"median IGD {med:.4f} (<= 0.05), {dt:.0f}s (< 120s)")
    assert ok


def _maze_hits(baseline: bool, seed: int) -> bool:
    cfg = parse_config({"algorithm": "safe", "problem": "maze", "seed": seed, "generations": 250,
                        "problem_options": {"maze": "deceptive"}})
    domain = build_problem(cfg)
    ps, po = population_params(cfg)
    objs = None
    if baseline:
        po, objs = frozen_objective_params(seed, ps.generations), [objective_genome(1.0, 0.0)]
    res = run_safe(domain, ps, po, objfuncs=objs)
    return bool(res.trace.column("goal_reached").any())


@pytest.mark.slow
def test_05_deceptive_maze_contrast():
    t = time.perf_counter()
    base = sum(_maze_hits(True, s) for s in range(20))
    safe = sum(_maze_hits(False, s) for s in range(20))
    dt = time.perf_counter() - t
    ok = base <= 2 and safe >= 12 and dt < 300
    record(5, "deceptive maze", ok,
           f"distance-only {base}/20 (<= 2), SAFE {safe}/20 (>= 12), {dt:.0f}s (< 300s)")
    assert ok


def _omnirep_errors(problem, generations, seeds):
    errs = []
    for s in seeds:
        cfg = parse_config({"algorithm": "omnirep", "problem": problem, "seed": s, "generations": generations})
        errs.append(run_experiment(cfg, write=False).result.best_error)
    return np.array(errs)


@pytest.mark.slow
def test_06_bitcount_regression():
    t = time.perf_counter()
    errs = _omnirep_errors("bitcount", 200, range(20))
    dt = time.perf_counter() - t
    hits = int((errs <= 1e-2).sum())
    ok = record(6, "bit-count regression", hits >= 16 and dt < 120,
                f"{hits}/20 with MSE <= 1e-2 (>= 16), {dt:.0f}s (< 120s)")
    assert ok


@pytest.mark.slow
def test_07_program_emulation():
    t = time.perf_counter()
    errs = _omnirep_errors("program", 100, range(20))
    dt = time.perf_counter() - t
    hits = int((errs < 1e-9).sum())
    ok = record(7, "program emulation", hits >= 10 and dt < 120,
                f"{hits}/20 exact (>= 10), {dt:.0f}s (< 120s)")
    assert ok


def test_08_commensalism():
    cfg = parse_config({"algorithm": "safe", "problem": "maze", "seed": 8})
    domain = build_problem(cfg)
    ps, po = population_params(cfg)
    rng = np.random.default_rng(8)
    changed = 0
    state = init_state(domain, ps, po)
    for trial in range(100):
        scored, _ = safe_step(state, domain, ps, po, evolve=False)
        before = [o.fitness for o in scored.objfuncs]
        state.solutions = [Individual(domain.solution_template.random(rng)) for _ in state.solutions]
        for o in state.objfuncs:
            o.fitness = None
        rescored, _ = safe_step(state, domain, ps, po, evolve=False)
        changed += [o.fitness for o in rescored.objfuncs] != before
        # move to a fresh objective population for the next trial
        state = init_state(domain, ps, po)
        state.objfuncs = [Individual(objective_genome(*rng.random(2))) for _ in state.objfuncs]
    ok = record(8, "commensalism", changed == 0, f"{100 - changed}/100 trials unchanged")
    assert ok


@pytest.mark.slow
def test_09_thread_determinism(tmp_path):
    problems = [("omnirep", "bitcount"), ("omnirep", "precision"), ("omnirep", "program"),
                ("omnirep", "image"), ("safe", "maze"), ("safe", "zdt")]
    same = []
    for algo, prob in problems:
        out = {}
        for threads in (1, 8):
            d = tmp_path / f"{prob}-{threads}"
            run_experiment(parse_config({"algorithm": algo, "problem": prob, "seed": 9, "threads": threads,
                                         "output_dir": str(d)}))
            out[threads] = (d / "run.csv").read_bytes()
        same.append(out[1] == out[8])
    ok = record(9, "determinism", all(same), f"{sum(same)}/6 problems with identical run.csv (threads 1 vs 8)")
    assert ok


@pytest.mark.slow
def test_10_image_smoke():
    better = 0
    for seed in range(10):
        cfg = parse_config({"algorithm": "omnirep", "problem": "image", "seed": seed, "generations": 100,
                            "problem_options": {"width": 16, "height": 16}})
        sse = run_experiment(cfg, write=False).trace.column("best_error")
        better += sse[-1] < sse[0]
    ok = record(10, "image smoke", better == 10, f"{better}/10 seeds improved on generation 0")
    assert ok
