"""Deterministic simulator comparing flooding content search with a
hash-sharded, DNS-style resolver hierarchy over the same topologies."""

from .core import (ContentName, DataPacket, InterestPacket, assign_resolver,
                   crc16, parse_name)
from .engine import Simulation
from .resolution import Deployment, ResolutionOutcome
from .scenarios import ScenarioConfig, run_scenario
from .topology import Topology, load_preset, load_topology

__version__ = "0.1.0"

__all__ = [
    "ContentName", "DataPacket", "InterestPacket", "assign_resolver", "crc16",
    "parse_name", "Simulation", "Deployment", "ResolutionOutcome",
    "ScenarioConfig", "run_scenario", "Topology", "load_preset", "load_topology",
    "__version__",
]
