"""Command line, pipeline reports and serialization."""

from .config import PipelineConfig, UsageError, load_config, load_seed_file, parse_seeds
from .emit import emit, parse
from .pipeline import (
    EXIT_INCONSISTENT,
    EXIT_OK,
    EXIT_REFERENCE,
    EXIT_USAGE,
    DerivationReport,
    PipelineError,
    run_pipeline,
)

__all__ = ["PipelineConfig", "UsageError", "load_config", "load_seed_file", "parse_seeds", "emit", "parse",
           "DerivationReport", "PipelineError", "run_pipeline", "EXIT_OK", "EXIT_INCONSISTENT",
           "EXIT_USAGE", "EXIT_REFERENCE"]
