"""Frame expressions, experiment configs, drivers and the CLI."""

from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .drivers import Report, emit_outputs, run_deform, run_factorize, run_sweep, run_verify
from .expr import Expr, ParseError, parse_expr, pretty

__all__ = [
    "ConfigError", "ExperimentConfig", "config_from_dict", "load_config",
    "Report", "emit_outputs", "run_deform", "run_factorize", "run_sweep", "run_verify",
    "Expr", "ParseError", "parse_expr", "pretty",
]
