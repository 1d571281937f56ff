"""Placement (BFS seed + simulated annealing), PathFinder routing, configuration.

Annealing schedule: temperature starts at 2.0 and is multiplied by 0.9 until
it drops below 0.01; each temperature runs ``max(10, 10 * n**1.33)`` moves.
All random draws come from ``numpy.random.default_rng(seed)`` up front, so the
compiled and interpreted kernels see the same move stream.

PathFinder costs: entering node ``n`` costs
``(1 + history[n]) * (1 + pres_fac * overuse_if_taken(n))``; ``pres_fac``
starts at 0.5 and grows x1.5 per iteration, ``history`` grows by 1.0 for each
overused node after every iteration.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .archmodel import Fabric, PinNode, RoutingGraph, SegNode, build_routing_graph
from .bitstream import FabricConfig
from .errors import Diagnostic, TooManyClustersError, UnroutableError
from .mapper import Packing
from .plb import ImConfig, ImLayout, PdeConfig, PlbConfig

T_START = 2.0
T_STOP = 0.01
COOLING = 0.9
PRES_FAC_START = 0.5
PRES_FAC_MULT = 1.5
HIST_INCREMENT = 1.0


@lru_cache(maxsize=16)
def routing_graph(fabric: Fabric) -> RoutingGraph:
    return build_routing_graph(fabric)


@dataclass(frozen=True)
class PlacedNet:
    name: str
    source: int | None
    sinks: tuple[int, ...]


@dataclass
class Placement:
    fabric: Fabric
    sites: list[tuple[int, int]]
    pins: dict[tuple[int, str, str], int] = field(default_factory=dict)
    nets: dict[str, PlacedNet] = field(default_factory=dict)
    io: dict[str, tuple[str, tuple[int, ...]]] = field(default_factory=dict)
    wirelength: int = 0


def _bfs_sites(rows: int, cols: int) -> list[tuple[int, int]]:
    start = ((rows - 1) // 2, (cols - 1) // 2)
    order, seen, queue = [], {start}, deque([start])
    while queue:
        r, c = queue.popleft()
        order.append((r, c))
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            nxt = (r + dr, c + dc)
            if 0 <= nxt[0] < rows and 0 <= nxt[1] < cols and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return order


def _cluster_nets(packing: Packing):
    """Nets that touch two or more clusters, as sorted cluster index lists."""
    touch: dict[str, set[int]] = {}
    for ci, cluster in enumerate(packing.clusters):
        for net in set(cluster.consumed()) | set(cluster.produced()):
            touch.setdefault(net, set()).add(ci)
    return {net: sorted(cs) for net, cs in sorted(touch.items()) if len(cs) > 1}


def _csr(lists, n_rows):
    ptr = np.zeros(n_rows + 1, dtype=np.int64)
    for i, xs in enumerate(lists):
        ptr[i + 1] = ptr[i] + len(xs)
    flat = np.array([x for xs in lists for x in xs], dtype=np.int64)
    return ptr, flat


def place(p: Packing, f: Fabric, seed: int = 1) -> Placement:
    rows, cols = f.params.rows, f.params.cols
    n = len(p.clusters)
    if n > rows * cols:
        raise TooManyClustersError(f"{n} clusters do not fit {rows}x{cols} PLB sites")
    order = _bfs_sites(rows, cols)
    site_of = np.array([r * cols + c for r, c in order[:n]], dtype=np.int64)
    owner = np.full(rows * cols, -1, dtype=np.int64)
    owner[site_of] = np.arange(n)

    nets = list(_cluster_nets(p).values())
    net_ptr, net_cells = _csr(nets, len(nets))
    per_cell = [[] for _ in range(n)]
    for i, cs in enumerate(nets):
        for c in cs:
            per_cell[c].append(i)
    cell_ptr, cell_nets = _csr(per_cell, n)

    if nets and n > 0:
        rng = np.random.default_rng(seed)
        moves = max(10, int(10 * n**1.33))
        temps = []
        t = T_START
        while t >= T_STOP:
            temps.append(t)
            t *= COOLING
        temp_seq = np.repeat(np.array(temps), moves)
        m = temp_seq.shape[0]
        move_cell = rng.integers(0, n, size=m, dtype=np.int64)
        move_site = rng.integers(0, rows * cols, size=m, dtype=np.int64)
        rand_u = rng.random(m)
        kernels.anneal(site_of, owner, cols, net_ptr, net_cells, cell_ptr, cell_nets,
                       move_cell, move_site, rand_u, temp_seq)

    sites = [(int(s) // cols, int(s) % cols) for s in site_of]
    pl = Placement(f, sites, wirelength=int(kernels.hpwl(site_of, cols, net_ptr, net_cells)))
    _assign_pins(pl, p)
    return pl


_SIDE_VECTORS = ((-1, 0), (0, 1), (1, 0), (0, -1))  # N, E, S, W as (drow, dcol)


def _side_order(vec):
    if vec is None:
        return [0, 1, 2, 3]
    scores = [vec[0] * dr + vec[1] * dc for dr, dc in _SIDE_VECTORS]
    return sorted(range(4), key=lambda s: (-scores[s], s))


def _assign_pins(pl: Placement, p: Packing) -> None:
    f = pl.fabric
    n_in, n_out = f.params.plb_inputs, f.params.plb_outputs
    driver: dict[str, int] = {}
    readers: dict[str, list[int]] = {}
    io_cluster: list[tuple[list[str], list[str]]] = []
    for ci in range(len(p.clusters)):
        ins, outs = p.external_io(ci)
        io_cluster.append((ins, outs))
        for net in outs:
            driver[net] = ci
        for net in ins:
            readers.setdefault(net, []).append(ci)

    def take(ci, kind, net, vec, free):
        for side in _side_order(vec):
            for k in range(side, n_in if kind == "in" else n_out, 4):
                if k in free:
                    free.discard(k)
                    pl.pins[(ci, net, kind)] = k
                    return
        raise TooManyClustersError(f"cluster {ci} ran out of {kind} pins")  # pragma: no cover

    for ci, (ins, outs) in enumerate(io_cluster):
        r, c = pl.sites[ci]
        free_in, free_out = set(range(n_in)), set(range(n_out))
        for net in ins:
            vec = None
            if net in driver:
                dr, dc = pl.sites[driver[net]]
                vec = (dr - r, dc - c)
            take(ci, "in", net, vec, free_in)
        for net in outs:
            vec = None
            targets = readers.get(net, [])
            if targets:
                vec = (
                    sum(pl.sites[t][0] for t in targets) / len(targets) - r,
                    sum(pl.sites[t][1] for t in targets) / len(targets) - c,
                )
            take(ci, "out", net, vec, free_out)

    inputs, outputs = set(p.netlist.inputs), set(p.netlist.outputs)
    for net in sorted(set(driver) | set(readers)):
        sinks = tuple(
            f.pin("in", *pl.sites[ci], pl.pins[(ci, net, "in")]) for ci in readers.get(net, [])
        )
        if net in driver:
            ci = driver[net]
            src = f.pin("out", *pl.sites[ci], pl.pins[(ci, net, "out")])
            pl.nets[net] = PlacedNet(net, src, sinks)
            if net in outputs:
                pl.io[net] = ("out", (src,))
        else:
            pl.nets[net] = PlacedNet(net, None, sinks)
            if net in inputs:
                pl.io[net] = ("in", sinks)


@dataclass
class RouteTree:
    source: int
    sinks: tuple[int, ...]
    parent: dict[int, int]

    @property
    def nodes(self) -> list[int]:
        return [self.source] + sorted(self.parent)


@dataclass
class Routes:
    fabric: Fabric
    trees: dict[str, RouteTree]
    io: dict[str, tuple[str, tuple[int, ...]]] = field(default_factory=dict)
    iterations: int = 0

    def segments(self, net: str) -> list[SegNode]:
        tree = self.trees[net]
        return [self.fabric.nodes[n] for n in tree.nodes if isinstance(self.fabric.nodes[n], SegNode)]

    def segment_count(self, net: str, sink: int) -> int:
        tree = self.trees[net]
        count, node = 0, sink
        while node != tree.source:
            node = tree.parent[node]
            if isinstance(self.fabric.nodes[node], SegNode):
                count += 1
        return count


def route(pl: Placement, f: Fabric, max_iterations: int = 50) -> Routes:
    graph = routing_graph(f)
    nets = [pn for name, pn in sorted(pl.nets.items()) if pn.source is not None and pn.sinks]
    n_nodes = graph.n_nodes
    occ = np.zeros(n_nodes, dtype=np.int64)
    hist = np.zeros(n_nodes, dtype=np.float64)
    trees: dict[str, RouteTree] = {}
    pres_fac = PRES_FAC_START
    is_seg = np.array([isinstance(n, SegNode) for n in f.nodes])

    def node_cost(v):
        over = max(0, int(occ[v]) + 1 - graph.capacity)
        return (1.0 + hist[v]) * (1.0 + pres_fac * over)

    def route_net(pn: PlacedNet) -> RouteTree:
        parent: dict[int, int] = {}
        tree_nodes = {pn.source}
        src = f.nodes[pn.source]

        def dist(node):
            q = f.nodes[node]
            return abs(q.row - src.row) + abs(q.col - src.col)

        for sink in sorted(pn.sinks, key=lambda s: (dist(s), s)):
            if sink in tree_nodes:
                continue
            best = {n: 0.0 for n in tree_nodes}
            prev: dict[int, int] = {}
            heap = [(0.0, n) for n in sorted(tree_nodes)]
            heapq.heapify(heap)
            found = False
            while heap:
                d, u = heapq.heappop(heap)
                if d > best.get(u, float("inf")):
                    continue
                if u == sink:
                    found = True
                    break
                for v in graph.succ[u]:
                    if not is_seg[v] and v != sink:
                        continue
                    nd = d + node_cost(v)
                    if nd < best.get(v, float("inf")):
                        best[v] = nd
                        prev[v] = u
                        heapq.heappush(heap, (nd, v))
            if not found:
                raise UnroutableError(f"net {pn.name}: sink {f.nodes[sink]} unreachable")
            node = sink
            while node not in tree_nodes:
                parent[node] = prev[node]
                tree_nodes.add(node)
                node = prev[node]
        return RouteTree(pn.source, pn.sinks, parent)

    for it in range(1, max_iterations + 1):
        for pn in nets:
            old = trees.get(pn.name)
            if old is not None:
                for n in old.nodes:
                    occ[n] -= 1
            tree = route_net(pn)
            trees[pn.name] = tree
            for n in tree.nodes:
                occ[n] += 1
        over = np.nonzero(occ > graph.capacity)[0]
        if over.size == 0:
            return Routes(f, trees, dict(pl.io), it)
        hist[over] += HIST_INCREMENT
        pres_fac *= PRES_FAC_MULT
    names = [str(f.nodes[n]) for n in over[:8]]
    raise UnroutableError(
        f"congestion unresolved after {max_iterations} iterations on {over.size} nodes: {', '.join(names)}",
        overused=[f.nodes[n] for n in over],
    )


def check_routes(r: Routes, f: Fabric) -> list[Diagnostic]:
    graph = routing_graph(f)
    diags = []
    users: dict[int, list[str]] = {}
    for name, tree in sorted(r.trees.items()):
        for n in tree.nodes:
            users.setdefault(n, []).append(name)
        for child, par in tree.parent.items():
            if not graph.has_edge(par, child):
                diags.append(Diagnostic("bad-edge", f"net {name}: no edge {f.nodes[par]} -> {f.nodes[child]}"))
        for node in tree.parent:
            seen = set()
            cur = node
            while cur != tree.source:
                if cur in seen or cur not in tree.parent:
                    diags.append(Diagnostic("not-a-tree", f"net {name}: {f.nodes[node]} does not reach the source"))
                    break
                seen.add(cur)
                cur = tree.parent[cur]
        for sink in tree.sinks:
            if sink != tree.source and sink not in tree.parent:
                diags.append(Diagnostic("disconnected", f"net {name}: sink {f.nodes[sink]} not reached"))
    for node, names in sorted(users.items()):
        if len(names) > graph.capacity:
            diags.append(Diagnostic("overuse", f"{f.nodes[node]} used by nets {', '.join(names)}"))
    return diags


def configure(p: Packing, pl: Placement, r: Routes, f: Fabric) -> FabricConfig:
    """Turn packing + placement + routes into a full fabric configuration."""
    params = f.params
    layout = ImLayout(params.plb_inputs, params.plb_outputs)
    grid = [[PlbConfig.default(params.plb_inputs, params.plb_outputs) for _ in range(params.cols)]
            for _ in range(params.rows)]
    for ci, cluster in enumerate(p.clusters):
        row, col = pl.sites[ci]
        produced = cluster.produced()

        def source(net):
            if net in produced:
                src = produced[net]
                return layout.src_pde if src[0] == "pde" else layout.src_le(src[1], "o0 o1 o2 v".split().index(src[2]))
            return layout.src_input(pl.pins[(ci, net, "in")])

        links = {}
        les = [le.config() for le in cluster.les]
        for li, le in enumerate(cluster.les):
            for k, net in enumerate(le.pins):
                if net is not None:
                    links[layout.sink_le(li, k)] = source(net)
        pde = PdeConfig()
        if cluster.pde:
            pde = PdeConfig(cluster.pde.k)
            links[layout.SINK_PDE] = source(cluster.pde.input)
        for (cj, net, kind), k in pl.pins.items():
            if cj == ci and kind == "out":
                links[layout.sink_output(k)] = source(net)
        while len(les) < 2:
            les.append(PlbConfig().le_a)
        grid[row][col] = PlbConfig(les[0], les[1], pde, ImConfig(layout=layout).with_links(links))

    graph = routing_graph(f)
    bits = np.zeros(len(f.switches), dtype=bool)
    for tree in r.trees.values():
        for child, par in tree.parent.items():
            bits[graph.edge_switch[(par, child)]] = True
    return FabricConfig(params, tuple(tuple(row) for row in grid), bits)


def route_report(r: Routes) -> str:
    lines = []
    for name, tree in sorted(r.trees.items()):
        segs = r.segments(name)
        desc = " ".join(f"{s.orient}{s.chan}.{s.pos}:{s.track}" for s in segs)
        lines.append(f"{name}: {len(segs)} segments, {len(tree.sinks)} sinks: {desc}")
    return "\n".join(lines) if lines else "(no inter-PLB nets)"


def pin_label(node: PinNode) -> str:
    return f"plb({node.row},{node.col}).{node.kind}{node.index}"
