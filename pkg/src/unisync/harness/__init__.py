"""Scenario files, pipelines, sweeps, plots and the command line."""
from .cli import main
from .config import Scenario, load_scenario, parse_scenario
from .scenarios import RunResult, execute, run_scenario, write_artifacts
from .sweep import sweep

__all__ = ["Scenario", "load_scenario", "parse_scenario", "RunResult", "execute",
           "run_scenario", "write_artifacts", "sweep", "main"]
