"""Deterministic simulation of view-synchronizer consensus and replicated
registers over crash-prone processes and lossy, possibly flaky channels."""

from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .runner import build_simulation, run_scenario
from .trace import Trace, TraceEvent

__all__ = ["Scenario", "ScenarioError", "load_scenario", "parse_scenario",
           "build_simulation", "run_scenario", "Trace", "TraceEvent"]
__version__ = "0.1.0"
