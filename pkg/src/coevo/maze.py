"""Grid maze used as SAFE's deceptive navigation benchmark.

A controller is 16 weights in [0, 1], one per wall-sensor state. In state
``s`` the robot prefers direction ``min(floor(4 * w[s]), 3)`` (N, E, S, W)
and falls back clockwise when that way is walled; fully boxed in, it stays
put. The run ends at the goal or after ``max_steps`` moves. The endpoint is
the robot's behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .evo_core import ContractError, Genome, GenomeTemplate, parallel_map
from .novelty import DEFAULT_K, NoveltyArchive, knn_novelty
from .safe import Monitor, SafeDomain

__all__ = [
    "MazeParseError",
    "MazeGrid",
    "Trajectory",
    "parse_maze",
    "load_maze",
    "bundled_mazes",
    "sense_state",
    "simulate",
    "simulate_many",
    "maze_metrics",
    "MazeDomain",
    "trajectory_csv",
    "trajectory_svg",
    "DIRECTIONS",
]

# (dx, dy) for N, E, S, W; y grows downwards (row index)
DIRECTIONS = ((0, -1), (1, 0), (0, 1), (-1, 0))
N_STATES = 16
MAX_STEPS = 200


class MazeParseError(ValueError):
    pass


class MazeGrid:
    """Rectangular occupancy grid. ``walls[y, x]`` is True for wall cells."""

    def __init__(self, walls, start: tuple[int, int], goal: tuple[int, int]):
        self.walls = np.array(walls, dtype=bool)
        self.walls.flags.writeable = False
        self.height, self.width = self.walls.shape
        self.start = (int(start[0]), int(start[1]))
        self.goal = (int(goal[0]), int(goal[1]))
        if self.start == self.goal:
            raise ContractError("start and goal must differ")
        for name, (x, y) in (("start", self.start), ("goal", self.goal)):
            if not (0 <= x < self.width and 0 <= y < self.height) or self.walls[y, x]:
                raise ContractError(f"{name} {(x, y)} is not an open cell")
        border = np.concatenate([self.walls[0], self.walls[-1], self.walls[:, 0], self.walls[:, -1]])
        if not border.all():
            raise ContractError("border cells must all be walls")
        self._tables = None

    @property
    def diagonal(self) -> float:
        """Largest possible distance between two cells."""
        return math.hypot(self.width - 1, self.height - 1)

    def is_open(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height and not self.walls[y, x]

    def tables(self):
        """Cell-indexed lookup tables for fast simulation.

        Returns ``(state, step)`` where ``state[c]`` is the sensor state of
        flat cell ``c`` and ``step[c, d]`` is the cell reached by preferring
        direction ``d`` from ``c`` (fallbacks applied).
        """
        if self._tables is None:
            n = self.width * self.height
            state = np.zeros(n, dtype=np.int64)
            step = np.tile(np.arange(n)[:, None], (1, 4))
            for y in range(self.height):
                for x in range(self.width):
                    if self.walls[y, x]:
                        continue
                    c = y * self.width + x
                    state[c] = sense_state(self, (x, y))
                    for d0 in range(4):
                        for off in range(4):
                            dx, dy = DIRECTIONS[(d0 + off) % 4]
                            if self.is_open(x + dx, y + dy):
                                step[c, d0] = (y + dy) * self.width + x + dx
                                break
            state.flags.writeable = False
            step.flags.writeable = False
            self._tables = (state, step)
        return self._tables

    def to_text(self) -> str:
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) == self.start:
                    row.append("S")
                elif (x, y) == self.goal:
                    row.append("G")
                else:
                    row.append("#" if self.walls[y, x] else ".")
            rows.append("".join(row))
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class Trajectory:
    cells: tuple[tuple[int, int], ...]
    reached_goal: bool

    @property
    def endpoint(self) -> tuple[int, int]:
        return self.cells[-1]

    @property
    def steps_used(self) -> int:
        return len(self.cells) - 1


def parse_maze(text: str) -> MazeGrid:
    """Parse rows of ``#`` (wall), ``.`` (open), ``S`` (start) and ``G`` (goal).

    Errors name 1-based line and column numbers.
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MazeParseError("maze is empty")
    width = len(lines[0])
    start = goal = None
    walls = []
    for row, line in enumerate(lines, start=1):
        if len(line) != width:
            raise MazeParseError(f"row {row} has length {len(line)}, expected {width} (ragged maze)")
        cells = []
        for col, ch in enumerate(line, start=1):
            if ch not in "#.SG":
                raise MazeParseError(f"line {row}, column {col}: unexpected character {ch!r}")
            if ch == "S":
                if start is not None:
                    raise MazeParseError(f"line {row}, column {col}: duplicate start")
                start = (col - 1, row - 1)
            elif ch == "G":
                if goal is not None:
                    raise MazeParseError(f"line {row}, column {col}: duplicate goal")
                goal = (col - 1, row - 1)
            on_border = row in (1, len(lines)) or col in (1, width)
            if on_border and ch != "#":
                raise MazeParseError(f"line {row}, column {col}: border cell must be a wall")
            cells.append(ch == "#")
        walls.append(cells)
    if start is None:
        raise MazeParseError("missing start (S)")
    if goal is None:
        raise MazeParseError("missing goal (G)")
    return MazeGrid(walls, start, goal)


def bundled_mazes() -> list[str]:
    files = resources.files("coevo").joinpath("data")
    return sorted(p.name[: -len(".txt")] for p in files.iterdir() if p.name.endswith(".txt"))


def load_maze(name_or_path: str | Path) -> MazeGrid:
    """Load a bundled maze by name (e.g. ``"deceptive"``) or a maze file by path."""
    p = Path(name_or_path)
    if p.suffix or p.exists():
        return parse_maze(p.read_text(encoding="utf-8"))
    data = resources.files("coevo").joinpath("data", f"{name_or_path}.txt")
    if not data.is_file():
        raise FileNotFoundError(f"no bundled maze named {name_or_path!r}; have {bundled_mazes()}")
    return parse_maze(data.read_text(encoding="utf-8"))


def sense_state(grid: MazeGrid, pos: tuple[int, int]) -> int:
    """Wall bitmask around ``pos``: N=1, E=2, S=4, W=8."""
    x, y = pos
    if not grid.is_open(x, y):
        raise ContractError(f"{pos} is a wall")
    s = 0
    for bit, (dx, dy) in enumerate(DIRECTIONS):
        if not grid.is_open(x + dx, y + dy):
            s |= 1 << bit
    return s


def _weights(c) -> np.ndarray:
    w = np.asarray(c.values if isinstance(c, Genome) else c, dtype=float)
    if w.shape[-1] != N_STATES:
        raise ContractError(f"controller needs {N_STATES} weights, got {w.shape[-1]}")
    return w


def _preferred(w: np.ndarray) -> np.ndarray:
    return np.minimum(np.floor(w * 4.0), 3).astype(np.int64)


def simulate(grid: MazeGrid, c, max_steps: int = MAX_STEPS) -> Trajectory:
    """Walk one controller through the maze, recording every cell."""
    pref = _preferred(_weights(c))
    x, y = grid.start
    cells = [(x, y)]
    for _ in range(max_steps):
        d0 = int(pref[sense_state(grid, (x, y))])
        for off in range(4):
            dx, dy = DIRECTIONS[(d0 + off) % 4]
            if grid.is_open(x + dx, y + dy):
                x, y = x + dx, y + dy
                break
        cells.append((x, y))
        if (x, y) == grid.goal:
            return Trajectory(tuple(cells), True)
    return Trajectory(tuple(cells), False)


def simulate_many(grid: MazeGrid, controllers, max_steps: int = MAX_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints ``(n, 2)`` and goal flags for many controllers at once.

    Gives the same endpoints as :func:`simulate`, using the grid's
    precomputed transition tables.
    """
    w = np.atleast_2d(_weights(controllers))
    pref = _preferred(w)
    state, step = grid.tables()
    goal = grid.goal[1] * grid.width + grid.goal[0]
    pos = np.full(len(w), grid.start[1] * grid.width + grid.start[0], dtype=np.int64)
    rows = np.arange(len(w))
    done = np.zeros(len(w), dtype=bool)
    for _ in range(max_steps):
        nxt = step[pos, pref[rows, state[pos]]]
        pos = np.where(done, pos, nxt)
        done |= pos == goal
        if done.all():
            break
    return np.column_stack([pos % grid.width, pos // grid.width]), done


def _scores(endpoints, grid: MazeGrid, novelty) -> np.ndarray:
    e = np.asarray(endpoints, dtype=float).reshape(-1, 2)
    dx = e[:, 0] - grid.goal[0]
    dy = e[:, 1] - grid.goal[1]
    dist = np.clip(1.0 - np.sqrt(dx * dx + dy * dy) / grid.diagonal, 0.0, 1.0)
    nov = np.clip(np.asarray(novelty, dtype=float) / grid.diagonal, 0.0, 1.0)
    return np.column_stack([dist, nov])


def maze_metrics(trajectory: Trajectory, grid: MazeGrid, cohort_endpoints, behavior_archive: NoveltyArchive | None,
                 k: int = DEFAULT_K) -> tuple[float, float]:
    """``(distance_score, novelty_score)``, both scaled by the grid diagonal into [0, 1]."""
    nov = knn_novelty(trajectory.endpoint, cohort_endpoints, behavior_archive, k)
    d, n = _scores([trajectory.endpoint], grid, [nov])[0]
    return float(d), float(n)


class MazeMonitor(Monitor):
    columns = ["best_distance", "goal_reached"]

    def __init__(self):
        self.first_goal_generation = None
        self.best_genome = None  # closest-to-goal controller seen so far
        self.best_score = -1.0

    def update(self, generation, genomes, raw, metrics):
        reached = bool(np.any(raw[:, 2] > 0))
        i = int(np.argmax(metrics[:, 0]))
        if metrics[i, 0] > self.best_score:
            self.best_score, self.best_genome = float(metrics[i, 0]), genomes[i]
        if reached and self.first_goal_generation is None:
            self.first_goal_generation = generation
        return {"best_distance": float(metrics[:, 0].max()), "goal_reached": reached}


class MazeDomain(SafeDomain):
    """Robot controllers scored by distance to goal and endpoint novelty."""

    uses_behavior = True

    def __init__(self, grid: MazeGrid, max_steps: int = MAX_STEPS):
        self.grid = grid
        self.max_steps = int(max_steps)
        self.solution_template = GenomeTemplate("real", N_STATES, 0.0, 1.0)
        grid.tables()

    def evaluate(self, genomes: Sequence[Genome], threads: int = 1):
        w = np.array([g.values for g in genomes])
        if threads > 1 and len(w) > 1:
            chunks = np.array_split(np.arange(len(w)), threads)
            parts = parallel_map(lambda idx: simulate_many(self.grid, w[idx], self.max_steps), chunks, threads)
            ends = np.concatenate([p[0] for p in parts])
            done = np.concatenate([p[1] for p in parts])
        else:
            ends, done = simulate_many(self.grid, w, self.max_steps)
        raw = np.column_stack([ends, done]).astype(float)
        return raw, ends.astype(float)

    def metrics(self, raw, novelty):
        return _scores(raw[:, :2], self.grid, novelty)

    def monitor(self) -> MazeMonitor:
        return MazeMonitor()


def trajectory_csv(traj: Trajectory) -> str:
    lines = ["step,x,y"] + [f"{i},{x},{y}" for i, (x, y) in enumerate(traj.cells)]
    return "\n".join(lines) + "\n"


def trajectory_svg(grid: MazeGrid, traj: Trajectory | None = None, cell: int = 20) -> str:
    """SVG 1.1 drawing of the maze with the trajectory as a polyline."""
    w, h = grid.width * cell, grid.height * cell
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]
    for y in range(grid.height):
        for x in range(grid.width):
            if grid.walls[y, x]:
                out.append(f'<rect x="{x * cell}" y="{y * cell}" width="{cell}" height="{cell}" fill="#333"/>')
    for (x, y), color in ((grid.start, "#1f77b4"), (grid.goal, "#d62728")):
        out.append(f'<rect x="{x * cell}" y="{y * cell}" width="{cell}" height="{cell}" fill="{color}"/>')
    if traj is not None:
        half = cell // 2
        pts = " ".join(f"{x * cell + half},{y * cell + half}" for x, y in traj.cells)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#2ca02c" stroke-width="{max(cell // 5, 1)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
