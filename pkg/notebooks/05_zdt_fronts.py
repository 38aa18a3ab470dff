"""
SAFE on the ZDT benchmarks
==========================

On ZDT problems a solution's score is ``-(a f1 + b f2)`` for the best of the
evolving weight pairs ``(a, b)``. Every evaluated point is offered to a
bounded Pareto archive, and the archive is compared with the true front by
inverted generational distance (IGD, lower is better).
"""

from pathlib import Path

import numpy as np

from coevo.harness import parse_config, run_experiment
from coevo.moo import ZdtProblem, igd, reference_front

out = Path(__file__).parent / "out"

for pid in (1, 2, 3):
    cfg = parse_config({"algorithm": "safe", "problem": "zdt", "seed": 0, "generations": 200,
                        "problem_options": {"id": pid}, "output_dir": str(out / f"zdt{pid}")})
    res = run_experiment(cfg)
    arch = res.result.monitor.archive
    curve = res.trace.column("igd")
    print(f"ZDT{pid}: IGD {curve[0]:.3f} -> {curve[49]:.3f} -> {curve[-1]:.4f}, "
          f"{len(arch)} archived points, f1 spans [{arch.points[:, 0].min():.2f}, {arch.points[:, 0].max():.2f}]")

# ZDT2's front is concave: no linear weighting prefers its interior over the
# two ends, so the archive fills in only what the search passes through.

# the front itself scores zero, and a single corner point does badly
ref = reference_front(ZdtProblem(1), 1000)
print("IGD of the reference front against itself:", igd(ref, ref))
print("IGD of the single point (0, 1):", round(igd(np.array([[0.0, 1.0]]), ref), 4))
