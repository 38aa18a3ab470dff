"""ZDT benchmark problems, Pareto dominance, a bounded Pareto archive and IGD.

Objectives are minimized here. ``form="standard"`` is the textbook
``f2 = g * h``; ``form="verbatim"`` drops the ``g`` factor (``f2 = h``), which
is how ZDT1 is sometimes printed. Both coincide on the optimal front (g = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evo_core import ContractError, Genome, GenomeTemplate, parallel_map
from .safe import Monitor, SafeDomain, combine_matrix
from .trace import format_value

__all__ = [
    "FORMS",
    "ZdtProblem",
    "zdt_eval",
    "zdt_eval_many",
    "dominates",
    "ParetoArchive",
    "pareto_insert",
    "non_dominated_2d",
    "crowding_distance",
    "reference_front",
    "igd",
    "ZdtDomain",
    "ZdtMonitor",
    "pareto_csv",
]

FORMS = ("standard", "verbatim")


@dataclass(frozen=True)
class ZdtProblem:
    id: int = 1
    k: int | None = None
    form: str = "standard"

    def __post_init__(self):
        if self.id not in (1, 2, 3, 4):
            raise ContractError(f"unknown ZDT problem {self.id}")
        if self.form not in FORMS:
            raise ContractError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.k is None:
            object.__setattr__(self, "k", 10 if self.id == 4 else 30)
        if self.k < 2:
            raise ContractError("ZDT needs k >= 2")

    @property
    def low(self) -> np.ndarray:
        lo = np.zeros(self.k)
        if self.id == 4:
            lo[1:] = -5.0
        return lo

    @property
    def high(self) -> np.ndarray:
        hi = np.ones(self.k)
        if self.id == 4:
            hi[1:] = 5.0
        return hi

    def h(self, f1, g):
        r = f1 / g
        if self.id in (1, 4):
            return 1.0 - np.sqrt(r)
        if self.id == 2:
            return 1.0 - r * r
        return 1.0 - np.sqrt(r) - r * np.sin(10.0 * np.pi * f1)


def zdt_eval_many(p: ZdtProblem, x) -> np.ndarray:
    """Objectives for each row of ``x``; returns an ``(n, 2)`` array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != p.k:
        raise ContractError(f"expected rows of length {p.k}, got shape {x.shape}")
    if np.any(x < p.low) or np.any(x > p.high):
        raise ContractError("decision vector outside ZDT bounds")
    f1 = x[:, 0]
    rest = x[:, 1:]
    if p.id == 4:
        g = 1.0 + 10.0 * (p.k - 1) + (rest * rest - 10.0 * np.cos(4.0 * np.pi * rest)).sum(axis=1)
    else:
        g = 1.0 + 9.0 / (p.k - 1) * rest.sum(axis=1)
    h = p.h(f1, g)
    f2 = g * h if p.form == "standard" else h
    return np.column_stack([f1, f2])


def zdt_eval(p: ZdtProblem, x) -> tuple[float, float]:
    if isinstance(x, Genome):
        x = x.values
    f = zdt_eval_many(p, np.asarray(x, dtype=float).reshape(1, -1))[0]
    return float(f[0]), float(f[1])


def dominates(p, q) -> bool:
    """True iff ``p`` is no worse than ``q`` everywhere and differs somewhere."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return bool(np.all(p <= q) and np.any(p != q))


def crowding_distance(points: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance; boundary points get ``inf``."""
    pts = np.asarray(points, dtype=float)
    n, m = pts.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(pts[:, j], kind="stable")
        col = pts[order, j]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


@dataclass
class ParetoArchive:
    """Mutually non-dominated objective points with the genomes that produced them.

    ``capacity=None`` keeps everything; otherwise the most crowded member is
    dropped (lowest index on ties) until the size fits.
    """

    capacity: int | None = None
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    solutions: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.points.shape[0]

    def insert(self, point, solution=None) -> bool:
        """Offer one point; returns whether it was kept."""
        pt = np.asarray(point, dtype=float).ravel()
        if len(self):
            le = np.all(self.points <= pt, axis=1)
            if np.any(le):  # dominated by or equal to a member
                return False
            dominated = np.all(pt <= self.points, axis=1)
            if np.any(dominated):
                keep = ~dominated
                self.points = self.points[keep]
                self.solutions = [s for s, kk in zip(self.solutions, keep) if kk]
        self.points = np.vstack([self.points.reshape(-1, pt.size), pt])
        self.solutions.append(solution)
        if self.capacity is not None and len(self) > self.capacity:
            self._prune()
        return True

    def _prune(self):
        while len(self) > self.capacity:
            cd = crowding_distance(self.points)
            worst = int(np.argmin(cd))
            self.points = np.delete(self.points, worst, axis=0)
            del self.solutions[worst]

    def insert_many(self, points, solutions=None) -> int:
        pts = np.asarray(points, dtype=float)
        if solutions is None:
            solutions = [None] * len(pts)
        # cheap pre-filter: only the batch's own non-dominated points can survive
        cand = non_dominated_2d(pts, return_index=True) if pts.shape[1] == 2 else range(len(pts))
        added = 0
        for i in cand:
            added += self.insert(pts[i], solutions[i])
        return added


def pareto_insert(archive: ParetoArchive, point, solution=None) -> ParetoArchive:
    """Insert in place and return the archive (for chaining)."""
    archive.insert(point, solution)
    return archive


def non_dominated_2d(points, return_index: bool = False):
    """Non-dominated, de-duplicated subset of 2-D points (minimization).

    Sorted sweep: order by ``f1`` then ``f2`` and keep each point whose ``f2``
    is strictly below every ``f2`` seen so far. Output is in ``f1`` order; the
    first occurrence of a duplicate is the one kept.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return [] if return_index else np.empty((0, 2))
    order = np.lexsort((np.arange(len(pts)), pts[:, 1], pts[:, 0]))
    kept = []
    best = math.inf
    for i in order:
        if pts[i, 1] < best:
            kept.append(int(i))
            best = pts[i, 1]
    if return_index:
        return kept
    return pts[kept]


def reference_front(p: ZdtProblem, n: int = 1000) -> np.ndarray:
    """``n`` points of the optimal front, evenly spread in ``f1`` order.

    The front is sampled on a grid of ``10 n`` values of ``f1`` at ``g = 1``,
    filtered for dominance (which carves ZDT3 into its disjoint pieces) and
    then thinned to ``n`` points.
    """
    if n < 1:
        raise ContractError("n must be positive")
    f1 = np.linspace(0.0, 1.0, 10 * n)
    f2 = p.h(f1, 1.0)
    front = non_dominated_2d(np.column_stack([f1, f2]))
    m = len(front)
    if m <= n:
        return front
    idx = np.round(np.linspace(0, m - 1, n)).astype(int)
    return front[idx]


def igd(obtained, reference) -> float:
    """Mean distance from each reference point to its nearest obtained point."""
    obt = np.asarray(obtained, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if obt.size == 0 or ref.size == 0:
        raise ContractError("igd needs non-empty obtained and reference sets")
    obt = obt.reshape(len(obt), -1)
    ref = ref.reshape(len(ref), -1)
    mins = np.empty(len(ref))
    step = max(1, 200_000 // max(len(obt), 1))
    for s in range(0, len(ref), step):
        diff = ref[s : s + step, None, :] - obt[None, :, :]
        mins[s : s + step] = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
    return math.fsum(mins.tolist()) / len(ref)


# ---------------------------------------------------------------- SAFE adapter

class ZdtMonitor(Monitor):
    """Feeds every evaluated solution to a Pareto archive and tracks IGD."""

    columns = ["igd", "archive_size"]

    def __init__(self, problem: ZdtProblem, reference: np.ndarray, capacity: int | None = 500):
        self.problem = problem
        self.reference = reference
        self.archive = ParetoArchive(capacity)
        self.igd_history: list[tuple[int, float]] = []

    def update(self, generation, genomes, raw, metrics):
        self.archive.insert_many(raw, list(genomes))
        value = igd(self.archive.points, self.reference)
        self.igd_history.append((generation, value))
        return {"igd": value, "archive_size": len(self.archive)}


class ZdtDomain(SafeDomain):
    """ZDT as a SAFE domain: metrics are ``(f1, f2)``, scores ``-(a f1 + b f2)``."""

    uses_behavior = False

    def __init__(self, problem: ZdtProblem, reference_points: int = 1000, archive_capacity: int | None = 500):
        self.problem = problem
        self.solution_template = GenomeTemplate("real", problem.k, problem.low, problem.high)
        self.reference = reference_front(problem, reference_points)
        self.archive_capacity = archive_capacity

    def evaluate(self, genomes, threads: int = 1):
        x = np.array([g.values for g in genomes])
        if threads > 1 and len(x) > 1:
            chunks = np.array_split(np.arange(len(x)), threads)
            f = np.concatenate(parallel_map(lambda idx: zdt_eval_many(self.problem, x[idx]), chunks, threads))
        else:
            f = zdt_eval_many(self.problem, x)
        return f, None

    def metrics(self, raw, novelty):
        return np.asarray(raw, dtype=float)

    def combine(self, metrics, weights):
        return combine_matrix(metrics, weights, sign=-1.0)

    def monitor(self) -> ZdtMonitor:
        return ZdtMonitor(self.problem, self.reference, self.archive_capacity)


def pareto_csv(archive: ParetoArchive) -> str:
    """``f1,f2,x1..xk`` rows in ascending ``f1`` order."""
    order = np.lexsort((archive.points[:, 1], archive.points[:, 0])) if len(archive) else []
    k = None
    rows = []
    for i in order:
        sol = archive.solutions[i]
        xs = [] if sol is None else list(sol.values if hasattr(sol, "values") else sol)
        k = len(xs) if k is None else k
        rows.append(",".join(format_value(v) for v in [*archive.points[i], *xs]))
    header = ["f1", "f2"] + [f"x{j + 1}" for j in range(k or 0)]
    return ",".join(header) + "\n" + "".join(r + "\n" for r in rows)
