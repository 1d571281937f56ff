"""Model of an asynchronous island-style FPGA: architecture, configuration
images, technology mapping and packing, place and route, and an event-driven
simulator for QDI and micropipeline circuits."""

from .archmodel import Fabric, FabricParams, build_fabric, build_routing_graph
from .bitstream import FabricConfig, decode, encode, image_length
from .errors import AfpgaError, Diagnostic
from .flow import Implementation, implement
from .mapper import check_packing, filling_ratio, pack, tech_map
from .netlist import Netlist, builtin, check_netlist, emit_netlist, parse_netlist
from .pnr import check_routes, configure, place, route

__version__ = "0.1.0"

__all__ = [
    "AfpgaError",
    "Diagnostic",
    "Fabric",
    "FabricConfig",
    "FabricParams",
    "Implementation",
    "Netlist",
    "build_fabric",
    "build_routing_graph",
    "builtin",
    "check_netlist",
    "check_packing",
    "check_routes",
    "configure",
    "decode",
    "emit_netlist",
    "encode",
    "filling_ratio",
    "image_length",
    "implement",
    "pack",
    "parse_netlist",
    "place",
    "route",
    "tech_map",
]
