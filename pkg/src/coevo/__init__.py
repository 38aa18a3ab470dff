"""Coevolutionary optimization: OMNIREP and SAFE with their benchmark domains."""

from .evo_core import ContractError, EvolutionParams, Genome, GenomeTemplate, Individual, RngStreams
from .harness import ExperimentConfig, load_config, parse_config, run_experiment
from .novelty import NoveltyArchive, knn_novelty
from .omnirep import coevolve
from .safe import run_safe

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "EvolutionParams",
    "ExperimentConfig",
    "Genome",
    "GenomeTemplate",
    "Individual",
    "NoveltyArchive",
    "RngStreams",
    "coevolve",
    "knn_novelty",
    "load_config",
    "parse_config",
    "run_experiment",
    "run_safe",
]
