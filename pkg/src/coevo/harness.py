"""Experiment configuration and orchestration.

A run is described by a JSON document (see :class:`ExperimentConfig`). The
harness resolves defaults and builds the problem instance from the seed.
After running the engine it writes the trace and the resolved config into
``output_dir``; some domains add their own files.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .evo_core import ContractError, EvolutionParams, RngStreams
from .maze import MazeDomain, load_maze, simulate, trajectory_csv, trajectory_svg
from .moo import ZdtDomain, ZdtProblem, pareto_csv
from .omnirep import coevolve
from .omnirep_problems import (
    BitCountProblem,
    BlocksProblem,
    PrecisionProblem,
    ProgramProblem,
    default_target,
    read_ppm,
    write_ppm,
)
from .safe import run_safe

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "PROBLEMS",
    "load_config",
    "parse_config",
    "build_problem",
    "population_params",
    "run_experiment",
    "ExperimentResult",
]

PROBLEMS = {
    "omnirep": ("bitcount", "precision", "program", "image"),
    "safe": ("maze", "zdt"),
}

# Keys accepted inside ``problem_options``, with their defaults.
PROBLEM_OPTIONS: dict[str, dict[str, Any]] = {
    "bitcount": {"total_bits": 120, "coeff_range": 10.0, "n_points": 20, "max_field_bits": None},
    "precision": {"n_terms": 50, "n_points": 20, "max_digits": 8},
    "program": {"n_lines": 10, "n_inputs": 10},
    "image": {"target": None, "width": 16, "height": 16, "n_blocks": 32, "max_block_length": None},
    "maze": {"maze": "deceptive", "max_steps": 200},
    "zdt": {"id": 1, "form": "standard", "k": None, "reference_points": 1000, "archive_capacity": 500},
}

# Per-problem GA settings that replace the generic defaults. Values given in
# the config always win over these.
PROBLEM_PARAMS: dict[str, dict[str, Any]] = {
    "bitcount": {"tournament_size": 3, "mutation_rate": 0.1, "elitism_count": 2},
    "program": {},
    "zdt": {"mutation_rate": 0.1, "elitism_count": 25},
}
PROBLEM_SECONDARY: dict[str, dict[str, Any]] = {
    "bitcount": {"tournament_size": 3, "mutation_rate": 0.05, "elitism_count": 2},
    "program": {},
}

PARAM_KEYS = ("population_size", "tournament_size", "crossover_prob", "mutation_rate", "elitism_count")

# stream tag used to draw random problem instances
TAG_PROBLEM = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the key."""


@dataclass
class ExperimentConfig:
    """Fully described run.

    ``population_size`` and the other GA fields configure the primary
    population (representations or solutions). ``secondary`` holds the same
    fields for the other population (encodings or objective functions); any
    field left out falls back to the per-problem default. ``None`` in a GA
    field means "use the default".
    """

    algorithm: str
    problem: str
    seed: int = 0
    generations: int | None = None
    population_size: int | None = None
    tournament_size: int | None = None
    crossover_prob: float | None = None
    mutation_rate: float | None = None
    elitism_count: int | None = None
    secondary: dict = field(default_factory=dict)
    n_representatives: int = 4
    threads: int = 1
    report_interval: int = 10
    output_dir: str = "out"
    problem_options: dict = field(default_factory=dict)

    def resolved(self) -> "ExperimentConfig":
        """Copy with every default filled in, suitable for echoing."""
        c = dataclasses.replace(self, secondary=dict(self.secondary), problem_options=dict(self.problem_options))
        prim, sec = _param_defaults(c)
        if c.population_size is None:
            c.population_size = prim["population_size"]
        c.secondary.setdefault("population_size", sec["population_size"])
        _fit_defaults(prim, c.population_size)
        _fit_defaults(sec, c.secondary["population_size"])
        for key in PARAM_KEYS:
            if getattr(c, key) is None:
                setattr(c, key, prim[key])
            c.secondary.setdefault(key, sec[key])
        if c.generations is None:
            c.generations = 200 if c.algorithm == "omnirep" else 250
        opts = dict(PROBLEM_OPTIONS[c.problem])
        opts.update(c.problem_options)
        c.problem_options = opts
        return c

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _param_defaults(c: ExperimentConfig) -> tuple[dict, dict]:
    base = {"tournament_size": 5, "crossover_prob": 0.8, "mutation_rate": None, "elitism_count": 1}
    if c.algorithm == "omnirep":
        prim = {**base, "population_size": 100}
        sec = {**base, "population_size": 100}
    else:
        prim = {**base, "population_size": 250}
        sec = {**base, "population_size": 25}
    prim.update(PROBLEM_PARAMS.get(c.problem, {}))
    sec.update(PROBLEM_SECONDARY.get(c.problem, {}))
    return prim, sec


def _fit_defaults(d: dict, pop):
    # default tournament and elite sizes shrink with small populations;
    # explicit values are never touched (they are validated instead)
    if isinstance(pop, int) and pop >= 1:
        d["tournament_size"] = min(d["tournament_size"], pop)
        d["elitism_count"] = min(d["elitism_count"], max(pop // 10, 1), pop - 1)


def _fail(key: str, why: str):
    raise ConfigError(f"{key}: {why}")


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config mapping and return the resolved configuration."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in doc:
        if key not in known:
            _fail(key, "unknown key")
    for key in ("algorithm", "problem"):
        if key not in doc:
            _fail(key, "missing required key")
    algo, prob = doc["algorithm"], doc["problem"]
    if algo not in PROBLEMS:
        _fail("algorithm", f"must be one of {sorted(PROBLEMS)}, got {algo!r}")
    if prob not in PROBLEMS[algo]:
        _fail("problem", f"{algo} supports {list(PROBLEMS[algo])}, got {prob!r}")
    for key in ("secondary", "problem_options"):
        if key in doc and not isinstance(doc[key], dict):
            _fail(key, "must be an object")
    for key in doc.get("secondary", {}):
        if key not in PARAM_KEYS:
            _fail(f"secondary.{key}", "unknown key")
    for key in doc.get("problem_options", {}):
        if key not in PROBLEM_OPTIONS[prob]:
            _fail(f"problem_options.{key}", f"unknown option for {prob}")

    cfg = ExperimentConfig(**doc).resolved()
    for key in ("seed", "generations", "n_representatives", "threads", "report_interval"):
        v = getattr(cfg, key)
        if not isinstance(v, int) or isinstance(v, bool):
            _fail(key, f"must be an integer, got {v!r}")
    if not 0 <= cfg.seed < 2**64:
        _fail("seed", "must be an unsigned 64-bit integer")
    for key in ("generations", "n_representatives", "threads", "report_interval"):
        if getattr(cfg, key) < 1:
            _fail(key, "must be positive")
    # let EvolutionParams check the GA fields, then re-label its error
    for prefix, values in (("", {k: getattr(cfg, k) for k in PARAM_KEYS}), ("secondary.", cfg.secondary)):
        try:
            EvolutionParams(generations=cfg.generations, seed=cfg.seed, **values)
        except (ContractError, TypeError) as exc:
            raise ConfigError(f"{prefix}{exc}") from None
    _check_options(cfg)
    return cfg


def _check_options(cfg: ExperimentConfig):
    o = cfg.problem_options
    p = cfg.problem
    if p == "maze":
        try:
            load_maze(o["maze"])
        except FileNotFoundError as exc:
            _fail("problem_options.maze", str(exc))
    elif p == "image" and o["target"] is not None and not Path(o["target"]).is_file():
        _fail("problem_options.target", f"file not found: {o['target']}")
    elif p == "zdt":
        if o["id"] not in (1, 2, 3, 4):
            _fail("problem_options.id", "must be 1, 2, 3 or 4")
        if o["form"] not in ("standard", "verbatim"):
            _fail("problem_options.form", "must be 'standard' or 'verbatim'")
    elif p == "bitcount" and o["total_bits"] < 8:
        _fail("problem_options.total_bits", "must be at least 8")


def load_config(path: str | os.PathLike, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config file; ``overrides`` replace top-level keys."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if overrides:
        doc = {**doc, **overrides}
    return parse_config(doc)


def population_params(cfg: ExperimentConfig) -> tuple[EvolutionParams, EvolutionParams]:
    cfg = cfg.resolved()
    prim = EvolutionParams(generations=cfg.generations, seed=cfg.seed, **{k: getattr(cfg, k) for k in PARAM_KEYS})
    sec = EvolutionParams(generations=cfg.generations, seed=cfg.seed, **cfg.secondary)
    return prim, sec


def build_problem(cfg: ExperimentConfig):
    """Problem instance (OMNIREP) or domain (SAFE) for this config and seed."""
    cfg = cfg.resolved()
    o = cfg.problem_options
    rng = RngStreams(cfg.seed).stream(TAG_PROBLEM)
    if cfg.problem == "bitcount":
        return BitCountProblem.random(rng, n_points=o["n_points"], total_bits=o["total_bits"],
                                      coeff_range=o["coeff_range"], max_field_bits=o["max_field_bits"])
    if cfg.problem == "precision":
        return PrecisionProblem.random(rng, n_terms=o["n_terms"], n_points=o["n_points"], max_digits=o["max_digits"])
    if cfg.problem == "program":
        return ProgramProblem.random(rng, n_lines=o["n_lines"], n_inputs=o["n_inputs"])
    if cfg.problem == "image":
        target = read_ppm(o["target"]) if o["target"] else default_target(o["width"], o["height"])
        return BlocksProblem(target, n_blocks=o["n_blocks"], max_block_length=o["max_block_length"])
    if cfg.problem == "maze":
        return MazeDomain(load_maze(o["maze"]), o["max_steps"])
    if cfg.problem == "zdt":
        return ZdtDomain(ZdtProblem(o["id"], o["k"], o["form"]), o["reference_points"], o["archive_capacity"])
    raise ConfigError(f"problem: unknown {cfg.problem!r}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trace: Any
    result: Any
    files: list[Path]


def run_experiment(cfg: ExperimentConfig, write: bool = True,
                   log: Callable[[str], None] | None = None) -> ExperimentResult:
    """Run one experiment and (optionally) write its files."""
    cfg = cfg.resolved()
    out = Path(cfg.output_dir)
    files: list[Path] = []
    if write:
        out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(cfg)
    prim, sec = population_params(cfg)
    every = cfg.report_interval
    last = cfg.generations - 1

    if cfg.algorithm == "omnirep":
        def on_gen(gen, res):
            if log and (gen % every == 0 or gen == last):
                log(f"gen {gen:4d}  best_error {res.best_error:.6g}")
            if write and cfg.problem == "image" and (gen % every == 0 or gen == last):
                p = out / f"best_{gen:04d}.ppm"
                write_ppm(p, problem.render(res.best_representation, res.best_encoding))
                files.append(p)

        result = coevolve(problem, prim, sec, cfg.n_representatives, cfg.threads, on_generation=on_gen)
    else:
        def on_gen(gen, state, row):
            if log and (gen % every == 0 or gen == last):
                extra = "  ".join(f"{k} {row[k]:.6g}" for k in row if k not in ("generation",))
                log(f"gen {gen:4d}  {extra}")

        result = run_safe(problem, prim, sec, threads=cfg.threads, on_generation=on_gen)

    trace = result.trace
    if write:
        files += _write_outputs(cfg, out, problem, result)
    return ExperimentResult(cfg, trace, result, files)


def _write_text(path: Path, text: str, files: list):
    path.write_text(text, encoding="utf-8", newline="\n")
    files.append(path)


def _write_outputs(cfg, out: Path, problem, result) -> list[Path]:
    files: list[Path] = []
    _write_text(out / "run.csv", result.trace.to_csv(), files)
    _write_text(out / "config_echo.json", json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", files)
    if cfg.problem == "image":
        p = out / "best.ppm"
        write_ppm(p, problem.render(result.best_representation, result.best_encoding))
        files.append(p)
        p = out / "target.ppm"
        write_ppm(p, problem.target)
        files.append(p)
    elif cfg.problem == "program":
        text = (
            "target:\n" + problem.listing(problem.target_opcodes, problem.target_imap)
            + "\n\nbest (error " + repr(result.best_error) + "):\n"
            + problem.listing(result.best_representation, result.best_encoding) + "\n"
        )
        _write_text(out / "program.txt", text, files)
    elif cfg.problem == "maze":
        traj = simulate(problem.grid, result.monitor.best_genome, problem.max_steps)
        _write_text(out / "trajectory.csv", trajectory_csv(traj), files)
        _write_text(out / "trajectory.svg", trajectory_svg(problem.grid, traj), files)
    elif cfg.problem == "zdt":
        mon = result.monitor
        _write_text(out / "pareto.csv", pareto_csv(mon.archive), files)
        lines = ["generation,igd"] + [f"{g},{v!r}" for g, v in mon.igd_history]
        _write_text(out / "igd.csv", "\n".join(lines) + "\n", files)
    return files

