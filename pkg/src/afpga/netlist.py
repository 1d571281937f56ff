"""Technology-independent asynchronous gate netlists and the ``.anet`` format.

``.anet`` is line oriented, ``#`` starts a comment::

    module fa
    port in a.t
    port out sum.t
    cell m111 C3 a.t b.t c.t -> m111
    cell d1 PDEL(8) req -> req_out
    channel dualrail a a.t a.f ack
    channel bundled in req ack a b cin
    end
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from itertools import product

from .errors import Diagnostic, NetlistSyntaxError, UnknownBuiltinError

ARITY = {
    "BUF": 1,
    "INV": 1,
    "AND2": 2,
    "AND3": 3,
    "OR2": 2,
    "OR3": 3,
    "OR4": 4,
    "XOR2": 2,
    "MAJ3": 3,
    "C2": 2,
    "C3": 3,
    "PDEL": 1,
}
STATEFUL = frozenset({"C2", "C3"})
_PDEL_RE = re.compile(r"^PDEL\((\d+)\)$")


@dataclass(frozen=True)
class CellKind:
    name: str
    k: int | None = None

    @property
    def arity(self) -> int:
        return ARITY[self.name]

    @property
    def stateful(self) -> bool:
        return self.name in STATEFUL

    @classmethod
    def parse(cls, token: str) -> "CellKind":
        m = _PDEL_RE.match(token)
        if m:
            return cls("PDEL", int(m.group(1)))
        if token in ARITY and token != "PDEL":
            return cls(token)
        raise ValueError(f"unknown cell kind {token!r}")

    def __str__(self):
        return f"PDEL({self.k})" if self.name == "PDEL" else self.name


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # "in" | "out"


@dataclass(frozen=True)
class Gate:
    name: str
    kind: CellKind
    inputs: tuple[str, ...]
    output: str


@dataclass(frozen=True)
class DualRailChannel:
    name: str
    t: str
    f: str
    ack: str

    kind = "dualrail"

    @property
    def data_nets(self) -> tuple[str, ...]:
        return (self.t, self.f)

    @property
    def nets(self) -> tuple[str, ...]:
        return (self.t, self.f, self.ack)


@dataclass(frozen=True)
class BundledChannel:
    name: str
    req: str
    ack: str
    data: tuple[str, ...]

    kind = "bundled"

    @property
    def data_nets(self) -> tuple[str, ...]:
        return (self.req,) + self.data

    @property
    def nets(self) -> tuple[str, ...]:
        return (self.req, self.ack) + self.data


@dataclass(frozen=True)
class Netlist:
    name: str
    ports: tuple[Port, ...] = ()
    gates: tuple[Gate, ...] = ()
    channels: tuple = ()

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.ports if p.direction == "in")

    @property
    def outputs(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.ports if p.direction == "out")

    @property
    def nets(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for p in self.ports:
            seen.setdefault(p.name)
        for g in self.gates:
            for n in g.inputs:
                seen.setdefault(n)
            seen.setdefault(g.output)
        return tuple(seen)

    def drivers(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    def gate(self, name: str) -> Gate:
        for g in self.gates:
            if g.name == name:
                return g
        raise KeyError(name)

    def channel_direction(self, ch) -> str:
        """``"in"`` when the environment drives the channel's data nets."""
        return "in" if ch.data_nets[0] in self.inputs else "out"


def parse_netlist(text: str) -> Netlist:
    name = None
    ports: list[Port] = []
    gates: list[Gate] = []
    channels: list = []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        if ended:
            raise NetlistSyntaxError(lineno, "content after 'end'")
        head = toks[0]
        if name is None and head != "module":
            raise NetlistSyntaxError(lineno, "expected 'module <name>'")
        if head == "module":
            if name is not None or len(toks) != 2:
                raise NetlistSyntaxError(lineno, "malformed or repeated 'module'")
            name = toks[1]
        elif head == "port":
            if len(toks) != 3 or toks[1] not in ("in", "out"):
                raise NetlistSyntaxError(lineno, "expected 'port in|out <net>'")
            ports.append(Port(toks[2], toks[1]))
        elif head == "cell":
            if "->" not in toks or toks.index("->") != len(toks) - 2 or len(toks) < 5:
                raise NetlistSyntaxError(lineno, "expected 'cell <inst> <KIND> <in...> -> <out>'")
            try:
                kind = CellKind.parse(toks[2])
            except ValueError as exc:
                raise NetlistSyntaxError(lineno, str(exc)) from None
            gates.append(Gate(toks[1], kind, tuple(toks[3:-2]), toks[-1]))
        elif head == "channel":
            if len(toks) >= 6 and toks[1] == "dualrail" and len(toks) == 6:
                channels.append(DualRailChannel(toks[2], toks[3], toks[4], toks[5]))
            elif len(toks) >= 6 and toks[1] == "bundled":
                channels.append(BundledChannel(toks[2], toks[3], toks[4], tuple(toks[5:])))
            else:
                raise NetlistSyntaxError(lineno, "malformed channel declaration")
        elif head == "end":
            if len(toks) != 1:
                raise NetlistSyntaxError(lineno, "'end' takes no arguments")
            ended = True
        else:
            raise NetlistSyntaxError(lineno, f"unknown statement {head!r}")
    if name is None:
        raise NetlistSyntaxError(1, "empty netlist")
    if not ended:
        raise NetlistSyntaxError(len(text.splitlines()), "missing 'end'")
    return Netlist(name, tuple(ports), tuple(gates), tuple(channels))


def emit_netlist(n: Netlist) -> str:
    lines = [f"module {n.name}"]
    lines += [f"port {p.direction} {p.name}" for p in n.ports]
    for g in n.gates:
        lines.append(f"cell {g.name} {g.kind} {' '.join(g.inputs)} -> {g.output}")
    for ch in n.channels:
        if ch.kind == "dualrail":
            lines.append(f"channel dualrail {ch.name} {ch.t} {ch.f} {ch.ack}")
        else:
            lines.append(f"channel bundled {ch.name} {ch.req} {ch.ack} {' '.join(ch.data)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def check_netlist(n: Netlist) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    drivers: dict[str, list[str]] = {}
    for p in n.ports:
        if p.direction == "in":
            drivers.setdefault(p.name, []).append(f"port {p.name}")
    names = set()
    for g in n.gates:
        if g.name in names:
            diags.append(Diagnostic("duplicate-instance", f"instance {g.name} declared twice"))
        names.add(g.name)
        drivers.setdefault(g.output, []).append(g.name)
        if len(g.inputs) != g.kind.arity:
            diags.append(
                Diagnostic("arity-mismatch", f"{g.name}: {g.kind} takes {g.kind.arity} inputs, got {len(g.inputs)}")
            )
        if g.kind.name == "PDEL" and not 0 <= (g.kind.k or 0) <= 15:
            diags.append(Diagnostic("bad-delay", f"{g.name}: PDEL delay {g.kind.k} outside 0..15"))
    for net, who in drivers.items():
        if len(who) > 1:
            diags.append(Diagnostic("multiple-drivers", f"net {net} driven by {', '.join(who)}"))
    for g in n.gates:
        for net in g.inputs:
            if net not in drivers:
                diags.append(Diagnostic("dangling-input", f"{g.name}: input net {net} has no driver"))
    for p in n.ports:
        if p.direction == "out" and p.name not in drivers:
            diags.append(Diagnostic("dangling-input", f"output port {p.name} has no driver"))
    known = set(n.nets)
    for ch in n.channels:
        for net in ch.nets:
            if net not in known:
                diags.append(Diagnostic("bad-channel", f"channel {ch.name} references unknown net {net}"))

    # cycles are legal only through state-holding cells
    gate_of = {g.output: g for g in n.gates}
    graph = TopologicalSorter()
    for g in n.gates:
        if g.kind.stateful:
            continue
        graph.add(g.name, *(gate_of[i].name for i in g.inputs if i in gate_of and not gate_of[i].kind.stateful))
    try:
        graph.prepare()
    except CycleError as exc:
        cycle = exc.args[1]
        diags.append(Diagnostic("stateless-cycle", "cycle through " + " -> ".join(cycle)))
    return diags


# ---------------------------------------------------------------------------
# built-in reference designs


def _c_element() -> Netlist:
    return Netlist(
        "c_element",
        (Port("a", "in"), Port("b", "in"), Port("y", "out")),
        (Gate("c1", CellKind("C2"), ("a", "b"), "y"),),
    )


def _fa_qdi() -> Netlist:
    ports = [Port(f"{x}.{r}", "in") for x in "abc" for r in "tf"]
    ports.append(Port("ack", "in"))
    ports += [Port(f"{x}.{r}", "out") for x in ("sum", "cout") for r in "tf"]
    gates = []
    minterms = {}
    for va, vb, vc in product((0, 1), repeat=3):
        net = f"m{va}{vb}{vc}"
        rails = tuple(f"{x}.{'t' if v else 'f'}" for x, v in zip("abc", (va, vb, vc)))
        gates.append(Gate(net, CellKind("C3"), rails, net))
        minterms[(va, vb, vc)] = net
    outputs = {
        "sum.t": lambda a, b, c: a ^ b ^ c,
        "sum.f": lambda a, b, c: 1 - (a ^ b ^ c),
        "cout.t": lambda a, b, c: int(a + b + c >= 2),
        "cout.f": lambda a, b, c: int(a + b + c < 2),
    }
    for out, fn in outputs.items():
        ins = tuple(net for v, net in minterms.items() if fn(*v))
        gates.append(Gate("or_" + out.replace(".", "_"), CellKind("OR4"), ins, out))
    channels = tuple(DualRailChannel(x, f"{x}.t", f"{x}.f", "ack") for x in "abc") + (
        DualRailChannel("sum", "sum.t", "sum.f", "ack"),
        DualRailChannel("cout", "cout.t", "cout.f", "ack"),
    )
    return Netlist("fa_qdi", tuple(ports), tuple(gates), channels)


def _fa_micropipeline(k: int = 8) -> Netlist:
    ports = tuple(Port(n, "in") for n in ("req", "a", "b", "cin", "ack")) + tuple(
        Port(n, "out") for n in ("req_out", "sum", "cout")
    )
    gates = (
        Gate("x1", CellKind("XOR2"), ("a", "b"), "t"),
        Gate("x2", CellKind("XOR2"), ("t", "cin"), "sum"),
        Gate("maj", CellKind("MAJ3"), ("a", "b", "cin"), "cout"),
        Gate("d1", CellKind("PDEL", k), ("req",), "req_out"),
    )
    channels = (
        BundledChannel("in", "req", "ack", ("a", "b", "cin")),
        BundledChannel("out", "req_out", "ack", ("sum", "cout")),
    )
    return Netlist("fa_micropipeline", ports, gates, channels)


def _glitch_demo() -> Netlist:
    # y = x xor x through a 1-deep and a 2-deep path: steady 0, pulses on edges
    return Netlist(
        "glitch_demo",
        (Port("x", "in"), Port("y", "out")),
        (
            Gate("s1", CellKind("BUF"), ("x",), "xs"),
            Gate("l1", CellKind("BUF"), ("x",), "xl1"),
            Gate("l2", CellKind("BUF"), ("xl1",), "xl2"),
            Gate("gx", CellKind("XOR2"), ("xs", "xl2"), "y"),
        ),
    )


BUILTINS = {
    "c_element": _c_element,
    "fa_qdi": _fa_qdi,
    "fa_micropipeline": _fa_micropipeline,
    "glitch_demo": _glitch_demo,
}


def builtin(name: str, **params) -> Netlist:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise UnknownBuiltinError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}") from None
    return factory(**params)
