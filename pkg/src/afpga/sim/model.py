"""Evaluable simulation models built from a netlist or from a configured fabric.

A model is a flat graph of three element types over integer signal ids:

* ``LutElement``: truth-table evaluator with one inertial delay for all of its
  outputs (netlist gates, fabric LEs);
* ``ForkElement``: one driver fanning out to several endpoints with a
  transport delay per branch; each branch delay is the sum of its *hops*
  (a netlist wire, an IM traversal, a wire segment);
* ``DelayElement``: pure transport delay of ``k`` units (PDEL cells, PDEs).

Nominal delays: LUT 2, hop 1, delay element ``k``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..archmodel import Fabric, PinNode, SegNode
from ..bitstream import FabricConfig
from ..errors import ElaborationError, ZeroDelayCycleError
from ..mapper import tech_map
from ..netlist import Netlist
from ..plb import ImLayout, LE_INPUTS

LUT_DELAY = 2
HOP_DELAY = 1


@dataclass(frozen=True)
class LutElement:
    name: str
    inputs: tuple[int, ...]
    outputs: tuple[int | None, ...]
    tables: tuple[int, ...]


@dataclass(frozen=True)
class ForkElement:
    name: str
    input: int
    branches: tuple[tuple[int, tuple[str, ...]], ...]


@dataclass(frozen=True)
class DelayElement:
    name: str
    input: int
    output: int
    k: int


@dataclass
class SimModel:
    mode: str
    signals: list[str] = field(default_factory=list)
    initial: list[int] = field(default_factory=list)
    luts: list[LutElement] = field(default_factory=list)
    forks: list[ForkElement] = field(default_factory=list)
    delays: list[DelayElement] = field(default_factory=list)
    ports: dict[str, int] = field(default_factory=dict)
    port_dirs: dict[str, str] = field(default_factory=dict)
    channels: tuple = ()
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def signal(self, name: str, initial: int = 0) -> int:
        if name in self._index:
            return self._index[name]
        self._index[name] = len(self.signals)
        self.signals.append(name)
        self.initial.append(initial)
        return self._index[name]

    def signal_id(self, name: str) -> int:
        return self._index[name]

    @property
    def hops(self) -> list[str]:
        seen: dict[str, None] = {}
        for f in self.forks:
            for _, hops in f.branches:
                for h in hops:
                    seen.setdefault(h)
        return list(seen)

    def fanout(self) -> list[list[tuple[str, int]]]:
        """Per signal, the elements that read it as ``("lut"|"fork"|"delay", index)``."""
        out: list[list[tuple[str, int]]] = [[] for _ in self.signals]
        for i, e in enumerate(self.luts):
            for s in dict.fromkeys(e.inputs):
                out[s].append(("lut", i))
        for i, e in enumerate(self.forks):
            out[e.input].append(("fork", i))
        for i, e in enumerate(self.delays):
            out[e.input].append(("delay", i))
        return out

    def check_zero_delay_cycles(self) -> None:
        """Reject loops made only of forks and zero-delay elements (no LUT on them)."""
        drives: dict[int, list[int]] = {}
        for e in self.forks:
            drives.setdefault(e.input, []).extend(b for b, _ in e.branches)
        for e in self.delays:
            if e.k == 0:
                drives.setdefault(e.input, []).append(e.output)
        state: dict[int, int] = {}
        for start in list(drives):
            if start in state:
                continue
            stack = [(start, iter(drives.get(start, ())))]
            state[start] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    state[node] = 2
                    stack.pop()
                    continue
                if state.get(nxt) == 1:
                    raise ZeroDelayCycleError(f"zero-delay loop through {self.signals[nxt]}")
                if nxt not in state:
                    state[nxt] = 1
                    stack.append((nxt, iter(drives.get(nxt, ()))))


def elaborate_netlist(n: Netlist) -> SimModel:
    """Reference-mode model: one LUT per gate, one isochronic wire per net."""
    m = SimModel("netlist", channels=n.channels)
    inputs = set(n.inputs)
    readers: dict[str, int] = {}
    for g in n.gates:
        for x in g.inputs:
            readers[x] = readers.get(x, 0) + 1
        if g.kind.stateful:
            readers[g.output] = readers.get(g.output, 0) + 1

    for net in n.nets:
        m.signal(net)

    def sink(net):
        return m.signal(f"{net}@sink")

    funcs = {f.name: f for f in tech_map(n)}
    for g in n.gates:
        if g.kind.name == "PDEL":
            m.delays.append(DelayElement(g.name, sink(g.inputs[0]), m.signal_id(g.output), g.kind.k or 0))
            continue
        fn = funcs[g.name]
        m.luts.append(
            LutElement(g.name, tuple(sink(x) for x in fn.inputs), (m.signal_id(g.output),), (fn.table,))
        )
    outputs = set(n.outputs)
    for net in n.nets:
        if readers.get(net) or (net in outputs and net not in inputs):
            m.forks.append(ForkElement(f"wire:{net}", m.signal_id(net), ((sink(net), (f"wire:{net}",)),)))
    for p in n.ports:
        if p.direction == "in" or p.name in inputs:
            m.ports[p.name] = m.signal_id(p.name)
        else:
            m.ports[p.name] = sink(p.name)
        m.port_dirs[p.name] = p.direction
    m.check_zero_delay_cycles()
    return m


def _le_tables(lut7_bits: int, lut2_bits: int) -> tuple[int, int, int, int]:
    o0 = lut7_bits
    o1 = o2 = v = 0
    for idx in range(128):
        low = idx & 63
        b1 = (lut7_bits >> low) & 1
        b2 = (lut7_bits >> (low | 64)) & 1
        o1 |= b1 << idx
        o2 |= b2 << idx
        v |= ((lut2_bits >> (2 * b2 + b1)) & 1) << idx
    return o0, o1, o2, v


def elaborate_fabric(f: Fabric, cfg: FabricConfig, r=None, netlist: Netlist | None = None) -> SimModel:
    """Fabric-mode model derived from configuration bits.

    Connectivity comes from the IM selections and the enabled routing
    switches in ``cfg``.  ``r`` (Routes) supplies the I/O binding of design
    ports to PLB pins; ``netlist`` adds ports that bypass the fabric.
    """
    params = f.params
    layout = ImLayout(params.plb_inputs, params.plb_outputs)
    m = SimModel("fabric", channels=netlist.channels if netlist else ())
    const = (m.signal("const0", 0), m.signal("const1", 1))
    io = dict(r.io) if r is not None else {}

    out_port_at: dict[int, str] = {}
    for name, (direction, pins) in sorted(io.items()):
        if direction == "out":
            out_port_at[pins[0]] = name

    # enabled switches as directed adjacency: out pin -> seg, seg <-> seg, seg -> in pin
    adj: dict[int, list[int]] = {}
    drivers_on_seg: dict[int, list[int]] = {}
    for s in map(int, cfg.route_bits.nonzero()[0]):
        u, v = f.switches[s]
        nu = f.nodes[u]
        if isinstance(nu, SegNode):
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        elif nu.kind == "out":
            adj.setdefault(u, []).append(v)
            drivers_on_seg.setdefault(v, []).append(u)
        else:
            adj.setdefault(v, []).append(u)

    def reach(out_node: int) -> list[tuple[int, tuple[str, ...]]]:
        """Input pins reachable from an output pin with the segment hops on the way."""
        found = []
        prev = {out_node: None}
        queue = deque([out_node])
        while queue:
            u = queue.popleft()
            for v in adj.get(u, ()):
                if v in prev:
                    continue
                node = f.nodes[v]
                if isinstance(node, SegNode):
                    others = [d for d in drivers_on_seg.get(v, ()) if d != out_node]
                    if others:
                        raise ElaborationError(
                            f"short: {f.nodes[out_node]} and {f.nodes[others[0]]} drive {node}", kind="short"
                        )
                prev[v] = u
                if isinstance(node, PinNode):
                    if node.kind == "in":
                        hops, w = [], u
                        while w != out_node:
                            hops.append(f"seg:{w}")
                            w = prev[w]
                        found.append((v, tuple(reversed(hops))))
                    continue
                queue.append(v)
        return sorted(found)

    def plb_name(row, col):
        return f"plb({row},{col})"

    def sink_signal(row, col, sink):
        return m.signal(f"{plb_name(row, col)}.{layout.sink_name(sink)}")

    def trace(row, col, source, hops, stack) -> list[tuple[int, tuple[str, ...]]]:
        key = (row, col, source)
        if key in stack:
            raise ZeroDelayCycleError(f"pass-through wiring loop at {plb_name(row, col)}")
        stack = stack | {key}
        sel = cfg.plb(row, col).im.selection
        branches = []
        for sink, src in enumerate(sel):
            if src != source:
                continue
            hop = f"im:{row},{col}:{sink}"
            kind = layout.describe_sink(sink)
            if kind[0] in ("le", "pde"):
                branches.append((sink_signal(row, col, sink), hops + (hop,)))
                continue
            node = f.pin("out", row, col, kind[1])
            if node in out_port_at:
                branches.append((m.ports[out_port_at[node]], hops + (hop,)))
            for pin, seg_hops in reach(node):
                p = f.nodes[pin]
                branches += trace(p.row, p.col, layout.src_input(p.index), hops + (hop,) + seg_hops, stack)
        return branches

    for name, (direction, _) in sorted(io.items()):
        m.ports[name] = m.signal(name)
        m.port_dirs[name] = direction
    if netlist is not None:
        for p in netlist.ports:
            if p.name in m.ports:
                continue
            if p.direction == "in":
                m.ports[p.name] = m.signal(p.name)
            elif p.name in netlist.inputs:
                m.ports[p.name] = m.signal(p.name)
            else:
                raise ElaborationError(f"output port {p.name} is not bound to the fabric")
            m.port_dirs[p.name] = p.direction

    for row, col in f.plbs:
        pcfg = cfg.plb(row, col)
        sel = pcfg.im.selection
        used = set(sel)
        base = plb_name(row, col)
        for li, le in enumerate(pcfg.les):
            srcs = [layout.src_le(li, j) for j in range(4)]
            if not used & set(srcs):
                continue
            ins = []
            for k in range(LE_INPUTS):
                sink = layout.sink_le(li, k)
                s = sel[sink]
                ins.append(const[s] if s < 2 else sink_signal(row, col, sink))
            outs = tuple(
                m.signal(f"{base}.{'AB'[li]}.{name}") if srcs[j] in used else None
                for j, name in enumerate(("o0", "o1", "o2", "v"))
            )
            m.luts.append(LutElement(f"{base}.{'AB'[li]}", tuple(ins), outs, _le_tables(le.lut7.bits, le.lut2.bits)))
        if layout.src_pde in used:
            s = sel[layout.SINK_PDE]
            pin = const[s] if s < 2 else sink_signal(row, col, layout.SINK_PDE)
            m.delays.append(DelayElement(f"{base}.pde", pin, m.signal(f"{base}.pde.out"), pcfg.pde.k))

    # forks from every active driver: LE outputs, PDE outputs, port-bound input pins
    for row, col in f.plbs:
        base = plb_name(row, col)
        used = set(cfg.plb(row, col).im.selection)
        for li in range(2):
            for j, name in enumerate(("o0", "o1", "o2", "v")):
                src = layout.src_le(li, j)
                if src in used:
                    sig = m.signal_id(f"{base}.{'AB'[li]}.{name}")
                    m.forks.append(ForkElement(f"net:{base}.{'AB'[li]}.{name}", sig, tuple(trace(row, col, src, (), frozenset()))))
        if layout.src_pde in used:
            sig = m.signal_id(f"{base}.pde.out")
            m.forks.append(ForkElement(f"net:{base}.pde", sig, tuple(trace(row, col, layout.src_pde, (), frozenset()))))
    for name, (direction, pins) in sorted(io.items()):
        if direction != "in":
            continue
        branches = []
        for pin in pins:
            p = f.nodes[pin]
            branches += trace(p.row, p.col, layout.src_input(p.index), (), frozenset())
        m.forks.append(ForkElement(f"net:{name}", m.ports[name], tuple(branches)))

    m.check_zero_delay_cycles()
    return m
