"""
A deceptive maze: distance alone versus SAFE
============================================

Robots start outside a walled room and the goal sits inside it, next to a
wall that faces the start. Heading straight for the goal ends against that
wall, which scores well on distance but is a dead end. SAFE scores each
robot with the best of 25 evolving weightings of distance and endpoint
novelty; the baseline keeps one fixed weighting, distance only.
"""

from pathlib import Path

import numpy as np

from coevo.harness import build_problem, parse_config, population_params
from coevo.maze import simulate, trajectory_svg
from coevo.safe import frozen_objective_params, objective_genome, run_safe

cfg = parse_config({"algorithm": "safe", "problem": "maze", "seed": 0})
domain = build_problem(cfg)
print(domain.grid.to_text())


def run(seed, baseline):
    c = parse_config({"algorithm": "safe", "problem": "maze", "seed": seed})
    ps, po = population_params(c)
    objs = None
    if baseline:
        po, objs = frozen_objective_params(seed, ps.generations), [objective_genome(1.0, 0.0)]
    return run_safe(domain, ps, po, objfuncs=objs)


seeds = range(4)
for label, baseline in (("distance only", True), ("SAFE", False)):
    firsts = []
    for s in seeds:
        res = run(s, baseline)
        firsts.append(res.monitor.first_goal_generation)
    print(f"{label:13s} first generation at goal per seed: {firsts}")

# where did the last generation of one SAFE run end up?
res = run(0, False)
raw, _ = domain.evaluate([ind.genome for ind in res.state.solutions])
ends = {tuple(e) for e in raw[:, :2].astype(int).tolist()}
print("distinct endpoints in the final SAFE population:", len(ends))
print("objective weights (a, b) in the final population:")
print(np.round([o.genome.values for o in res.state.objfuncs], 2))

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
traj = simulate(domain.grid, res.monitor.best_genome)
(out / "maze_best.svg").write_text(trajectory_svg(domain.grid, traj))
print("best path reaches goal:", traj.reached_goal, "after", traj.steps_used, "steps; drawn in out/maze_best.svg")
