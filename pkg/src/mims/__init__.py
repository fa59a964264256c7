"""Trace-driven simulator of a message-interface memory system and the DDR, BOB
and single-request message-interface systems it is compared against."""

from .config import ConfigError, CoreConfig, SimConfig
from .dram import TimingParams
from .engine import COMPILED, SimulationError
from .experiments import compare_modes, run, sweep_sched_latency
from .power import PowerParams
from .stats import RunReport, emit_report

__version__ = "0.1.0"

__all__ = ["SimConfig", "CoreConfig", "TimingParams", "PowerParams", "ConfigError",
           "SimulationError", "RunReport", "run", "compare_modes", "sweep_sched_latency",
           "emit_report", "COMPILED", "__version__"]
