"""Command-line surface: config loading, problem builders, commands and the property suite."""

from diffeoreg.cli.config import RunConfig, load_config

__all__ = ["RunConfig", "load_config"]
