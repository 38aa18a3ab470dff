"""
Evolving a bit layout together with the bits
============================================

A cubic ``a x^3 + b x^2 + c x + d`` is fitted from 20 samples. One
population evolves 120-bit strings, the other evolves how many of those bits
each coefficient gets. Neither half is useful alone, so each is scored by
pairing it with the best individuals of the other population.

Run with ``python notebooks/01_bitcount_encodings.py``.
"""

import numpy as np

from coevo import RngStreams
from coevo.harness import build_problem, parse_config, population_params
from coevo.omnirep import coevolve

cfg = parse_config({"algorithm": "omnirep", "problem": "bitcount", "seed": 3, "generations": 120})
problem = build_problem(cfg)
print("hidden coefficients:", np.round(problem.target, 3))

# a random pair is a poor fit
rng = RngStreams(99).stream(1)
bits, alloc = problem.rep_template.random(rng), problem.repair_encoding(problem.enc_template.random(rng))
print("random pair error:", problem.eval(bits, alloc))

prim, sec = population_params(cfg)
res = coevolve(problem, prim, sec)

# best error per generation, every 20 generations
err = res.trace.column("best_error")
for g in range(0, len(err), 20):
    print(f"gen {g:3d}  best error {err[g]:.5f}")

alloc = res.best_encoding.values
print("bits per coefficient:", alloc.tolist(), "of", problem.total_bits)
print("decoded:", np.round(problem.decode(res.best_representation, res.best_encoding), 3))
print("final error:", res.best_error)
