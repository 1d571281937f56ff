import os
import subprocess
import sys

import pytest

from afpga.archmodel import FabricParams, SegNode, build_fabric
from afpga.errors import TooManyClustersError, UnroutableError
from afpga.mapper import Cluster, Packing, pack, tech_map
from afpga.netlist import Netlist, builtin
from afpga.pnr import PlacedNet, Placement, RouteTree, Routes, check_routes, place, route
from conftest import BUILTIN_NAMES, implemented


def packed(name):
    n = builtin(name)
    return pack(tech_map(n), n)


def test_single_cluster_at_centre():
    f = build_fabric(FabricParams(4, 4, 8))
    pl = place(packed("c_element"), f, seed=3)
    assert pl.sites == [(1, 1)]


def test_too_many_clusters():
    f = build_fabric(FabricParams(4, 4, 8))
    p = Packing(Netlist("x"), [Cluster() for _ in range(17)], [], {})
    with pytest.raises(TooManyClustersError) as exc:
        place(p, f)
    assert exc.value.kind == "too-many-clusters"


def test_placement_deterministic_and_injective():
    f = build_fabric(FabricParams(4, 4, 8))
    p = packed("fa_qdi")
    a, b = place(p, f, seed=1), place(p, f, seed=1)
    assert a.sites == b.sites and a.pins == b.pins
    assert len(set(a.sites)) == len(a.sites)
    for (ci, net, kind), k in a.pins.items():
        assert 0 <= k < (12 if kind == "in" else 8)


def manual(f, pairs, sites=((0, 0), (0, 1))):
    pl = Placement(f, list(sites))
    for i, (src, dst) in enumerate(pairs):
        pl.nets[f"n{i}"] = PlacedNet(f"n{i}", f.pin("out", *sites[0], src), (f.pin("in", *sites[1], dst),))
    return pl


def test_adjacent_single_net_minimal():
    f = build_fabric(FabricParams(1, 2, 1))
    # east output pin 1 of (0,0) into west input pin 3 of (0,1): one shared segment
    r = route(manual(f, [(1, 3)]), f)
    tree = r.trees["n0"]
    assert len(tree.nodes) == 3
    assert [type(f.nodes[n]).__name__ for n in tree.nodes].count("SegNode") == 1
    assert check_routes(r, f) == []


@pytest.mark.parametrize("width", [1, 2])
def test_pigeonhole_unroutable(width):
    f = build_fabric(FabricParams(1, 2, width))
    # W+1 nets whose sinks sit on the west side of (0,1): all need the one channel between the PLBs
    pairs = [(k, 3 + 4 * k) for k in range(width + 1)]
    with pytest.raises(UnroutableError) as exc:
        route(manual(f, pairs), f, max_iterations=20)
    assert exc.value.kind == "unroutable"
    assert exc.value.overused


def test_w_nets_fit_w_tracks():
    f = build_fabric(FabricParams(1, 2, 2))
    r = route(manual(f, [(0, 3), (1, 7)]), f)
    assert check_routes(r, f) == []


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins_route_legally(name):
    impl = implemented(name)
    assert check_routes(impl.routes, impl.fabric) == []
    for net, tree in impl.routes.trees.items():
        for sink in tree.sinks:
            assert impl.routes.segment_count(net, sink) >= 1


def test_check_routes_diagnostics():
    impl = implemented("fa_qdi")
    f = impl.fabric
    trees = dict(impl.routes.trees)
    a, b = sorted(trees)[:2]
    ta, tb = trees[a], trees[b]
    seg = next(n for n in ta.parent if isinstance(f.nodes[n], SegNode))
    # graft a's segment into b's tree: overuse naming the node
    parent = dict(tb.parent)
    parent[seg] = tb.source
    trees[b] = RouteTree(tb.source, tb.sinks, parent)
    codes = {d.code: d.message for d in check_routes(Routes(f, trees), f)}
    assert "overuse" in codes and str(f.nodes[seg]) in codes["overuse"]

    broken = dict(impl.routes.trees)
    sink = ta.sinks[0]
    parent = {k: v for k, v in ta.parent.items() if k != sink}
    broken[a] = RouteTree(ta.source, ta.sinks, parent)
    assert "disconnected" in [d.code for d in check_routes(Routes(f, broken), f)]


def test_interpreted_kernel_gives_same_placement():
    code = (
        "from afpga.flow import implement; from afpga.netlist import builtin;"
        "i = implement(builtin('fa_qdi')); print(i.placement.sites, sorted(i.placement.pins.items()))"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, AFPGA_DISABLE_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout)
    assert outs[0] == outs[1]
