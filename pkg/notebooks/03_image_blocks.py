"""
Painting an image from same-colour runs
=======================================

The representation is a list of start pixels and the encoding a list of
``(length, colour)`` blocks. Block ``i`` is painted from start ``i`` along
the row-major pixel order; later blocks cover earlier ones and the rest of
the canvas keeps a base colour. Fitness is the summed squared error against
a 16x16 target. Snapshots are written as PPM files.
"""

from pathlib import Path

import numpy as np

from coevo.harness import parse_config, run_experiment
from coevo.omnirep_problems import image_error, read_ppm

out = Path(__file__).parent / "out" / "image"
cfg = parse_config({"algorithm": "omnirep", "problem": "image", "seed": 1, "generations": 100,
                    "report_interval": 25, "output_dir": str(out)})
res = run_experiment(cfg)

sse = res.trace.column("best_error")
print("SSE at generation 0:", int(sse[0]))
print("SSE at the end     :", int(sse[-1]), f"({sse[-1] / sse[0]:.0%} of the start)")

target = read_ppm(out / "target.ppm")
best = read_ppm(out / "best.ppm")
assert image_error(best, target) == sse[-1]

# mean colour per quadrant, target vs evolved
for name, img in (("target", target), ("best", best)):
    q = [img[:8, :8], img[:8, 8:], img[8:, :8], img[8:, 8:]]
    print(name, [np.round(b.reshape(-1, 3).mean(0)).astype(int).tolist() for b in q])

print("snapshots:", sorted(p.name for p in out.glob("best_*.ppm")))
