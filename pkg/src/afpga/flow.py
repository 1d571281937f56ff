"""The full implementation flow: map, pack, place, route, configure."""

from __future__ import annotations

from dataclasses import dataclass

from .archmodel import Fabric, FabricParams, build_fabric
from .bitstream import FabricConfig
from .errors import AfpgaError
from .mapper import Packing, check_packing, pack, tech_map
from .netlist import Netlist, check_netlist
from .pnr import Placement, Routes, check_routes, configure, place, route

DEFAULT_PARAMS = FabricParams(4, 4, 8)


@dataclass
class Implementation:
    netlist: Netlist
    fabric: Fabric
    packing: Packing
    placement: Placement
    routes: Routes
    config: FabricConfig


def implement(n: Netlist, params: FabricParams = DEFAULT_PARAMS, seed: int = 1) -> Implementation:
    """Run the whole flow; raises on netlist, packing or routing failure."""
    diags = check_netlist(n)
    if diags:
        raise AfpgaError("; ".join(f"{d.code}: {d.message}" for d in diags))
    fabric = build_fabric(params)
    p = pack(tech_map(n), n, params.plb_inputs, params.plb_outputs)
    diags = check_packing(p, params.plb_inputs, params.plb_outputs)
    if diags:
        raise AfpgaError("; ".join(f"{d.code}: {d.message}" for d in diags))
    pl = place(p, fabric, seed)
    r = route(pl, fabric)
    diags = check_routes(r, fabric)
    if diags:
        raise AfpgaError("; ".join(f"{d.code}: {d.message}" for d in diags))
    return Implementation(n, fabric, p, pl, r, configure(p, pl, r, fabric))


def fabric_model(impl: Implementation):
    from .sim import elaborate_fabric

    return elaborate_fabric(impl.fabric, impl.config, impl.routes, netlist=impl.netlist)
