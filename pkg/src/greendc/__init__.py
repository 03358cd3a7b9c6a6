"""Simulator for a solar-powered micro data center running interactive and batch work."""

from .engine import MetricsReport, Simulation, run
from .scenario import ScenarioConfig, bundled_scenario, load_scenario

__all__ = ["MetricsReport", "ScenarioConfig", "Simulation", "bundled_scenario", "load_scenario", "run"]
__version__ = "0.1.0"
