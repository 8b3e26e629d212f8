"""Scenario configuration, runs, figure reproduction and the command-line interface."""

from .config import ConfigError, ScenarioConfig, build_config
from .reproduce import reproduce
from .run import batch, run_scenario
from .scenarios import FIGURE_IDS

__all__ = ["ConfigError", "ScenarioConfig", "build_config", "reproduce", "batch", "run_scenario", "FIGURE_IDS"]
