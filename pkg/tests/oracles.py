"""Independent reference implementations used only by the tests.

Each one is written straight from the defining formula, as plainly as
possible, without sharing code with the package.
"""

import math


def novelty_bruteforce(p, cohort, archive, k):
    """Sort every distance, average the first k (or all when fewer)."""
    cands = [tuple(c) for c in cohort] + [tuple(a) for a in archive]
    if not cands:
        return math.inf
    dists = sorted(math.sqrt(sum((pi - ci) ** 2 for pi, ci in zip(p, c))) for c in cands)
    take = dists[:k]
    return math.fsum(take) / len(take)


def zdt_oracle(pid, x, form="standard"):
    """ZDT1-4 from the textbook definitions, scalar Python only."""
    k = len(x)
    f1 = x[0]
    if pid == 4:
        g = 1 + 10 * (k - 1) + sum(xi * xi - 10 * math.cos(4 * math.pi * xi) for xi in x[1:])
    else:
        g = 1 + 9 * sum(x[1:]) / (k - 1)
    if pid in (1, 4):
        h = 1 - math.sqrt(f1 / g)
    elif pid == 2:
        h = 1 - (f1 / g) ** 2
    else:
        h = 1 - math.sqrt(f1 / g) - (f1 / g) * math.sin(10 * math.pi * f1)
    return (f1, g * h) if form == "standard" else (f1, h)


def nondominated_bruteforce(points):
    """Set of distinct points not dominated by any other point (minimization)."""
    pts = {tuple(map(float, p)) for p in points}
    out = set()
    for p in pts:
        if not any(all(q[i] <= p[i] for i in range(len(p))) and q != p for q in pts):
            out.add(p)
    return out


def run_program_oracle(opcodes, imap, names, v, clamp=1e6):
    """Hand-written instruction table, stepped one line at a time."""
    table = {
        "add1": lambda x: x + 1,
        "minus2": lambda x: x - 2,
        "mul10": lambda x: x * 10,
        "div2": lambda x: x / 2,
        "neg": lambda x: -x,
        "fabs": abs,
        "sin": math.sin,
        "cos": math.cos,
        "tan": math.tan,
        "square": lambda x: x * x,
        "sqrt_abs": lambda x: math.sqrt(abs(x)),
        "id": lambda x: x,
    }
    x = float(v)
    for op in opcodes:
        x = table[names[imap[op - 1]]](x)
        if math.isnan(x):
            x = 0.0
        x = min(max(x, -clamp), clamp)
    return x
