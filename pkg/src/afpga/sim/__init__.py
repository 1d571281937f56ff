"""Event-driven simulation of netlists and configured fabrics."""

from .engine import DelayModel, HazardRecord, ResolvedDelays, Simulator, Trace, run
from .model import DelayElement, ForkElement, LutElement, SimModel, elaborate_fabric, elaborate_netlist
from .robust import Verdict, max_path_delay, qdi_robustness
from .testbench import Testbench, default_steps, default_testbench, default_tokens, extract_tokens
from .vcd import write_vcd

__all__ = [
    "DelayElement",
    "DelayModel",
    "ForkElement",
    "HazardRecord",
    "LutElement",
    "ResolvedDelays",
    "SimModel",
    "Simulator",
    "Testbench",
    "Trace",
    "Verdict",
    "default_steps",
    "default_testbench",
    "default_tokens",
    "elaborate_fabric",
    "elaborate_netlist",
    "extract_tokens",
    "max_path_delay",
    "qdi_robustness",
    "run",
    "write_vcd",
]
