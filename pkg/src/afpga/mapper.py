"""Technology mapping onto LE functions, packing into LEs and PLBs, filling ratio.

Slot model of one LE (see ``plb``): ``o1`` and ``o2`` are independent 6-input
functions over the shared inputs ``i0..i5``; ``o0`` is the 7-input root of the
same multiplexer tree, so an LE hosts either one 7-input function on ``o0`` or
up to two functions on ``o1``/``o2``.  The ``v`` slot hosts a 2-input function
of the LE's own ``o1``/``o2`` outputs, e.g. the OR of two dual-rail rails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable

from .errors import Diagnostic, UnsupportedCellError
from .netlist import BundledChannel, Netlist
from .plb import LE_INPUTS, Lut2Table, Lut7Table, eval_le, LeConfig

HALF_INPUTS = 6
SLOTS_PER_PLB = 8


def _c_element(*bits):
    *ins, y = bits
    if all(ins):
        return 1
    if not any(ins):
        return 0
    return y


CELL_FUNCTIONS: dict[str, Callable[..., int]] = {
    "BUF": lambda a: a,
    "INV": lambda a: 1 - a,
    "AND2": lambda a, b: a & b,
    "AND3": lambda a, b, c: a & b & c,
    "OR2": lambda a, b: a | b,
    "OR3": lambda a, b, c: a | b | c,
    "OR4": lambda a, b, c, d: a | b | c | d,
    "XOR2": lambda a, b: a ^ b,
    "MAJ3": lambda a, b, c: int(a + b + c >= 2),
    "C2": _c_element,
    "C3": _c_element,
}


@dataclass(frozen=True)
class LeFunction:
    """A single-output function bound for one LE slot.

    Bit ``i`` of ``table`` is the output for the input vector whose ``k``-th
    input equals bit ``k`` of ``i``.  For feedback functions the last input
    is the function's own output net.
    """

    name: str
    inputs: tuple[str, ...]
    output: str
    table: int
    feedback: bool = False

    @property
    def tap(self) -> str:
        return "root" if len(set(self.inputs)) > HALF_INPUTS else "half"

    def __call__(self, *bits: int) -> int:
        idx = sum(b << k for k, b in enumerate(bits))
        return (self.table >> idx) & 1


def truth_table(fn: Callable[..., int], arity: int) -> int:
    table = 0
    for idx in range(1 << arity):
        if fn(*((idx >> k) & 1 for k in range(arity))):
            table |= 1 << idx
    return table


def tech_map(n: Netlist) -> list[LeFunction]:
    """Map every logic cell to an LE function; PDEL cells are left to ``pack``."""
    funcs = []
    for g in n.gates:
        if g.kind.name == "PDEL":
            continue
        inputs = g.inputs + ((g.output,) if g.kind.stateful else ())
        if len(inputs) > LE_INPUTS:
            raise UnsupportedCellError(f"{g.name}: {len(inputs)} inputs after feedback reservation")
        table = truth_table(CELL_FUNCTIONS[g.kind.name], len(inputs))
        funcs.append(LeFunction(g.name, inputs, g.output, table, feedback=g.kind.stateful))
    return funcs


@dataclass
class LeAssignment:
    slots: dict[str, LeFunction] = field(default_factory=dict)

    @property
    def pins(self) -> tuple[str | None, ...]:
        """Net on each LUT input ``i0..i6``, in first-use order over the slots."""
        nets: list[str] = []
        for slot in ("o0", "o1", "o2"):
            fn = self.slots.get(slot)
            if fn:
                nets.extend(x for x in fn.inputs if x not in nets)
        return tuple(nets) + (None,) * (LE_INPUTS - len(nets))

    @property
    def is_root(self) -> bool:
        return "o0" in self.slots

    def input_nets(self) -> set[str]:
        return {x for x in self.pins if x is not None}

    def output_nets(self) -> dict[str, str]:
        return {fn.output: slot for slot, fn in self.slots.items()}

    def functions(self) -> list[LeFunction]:
        return [self.slots[s] for s in ("o0", "o1", "o2", "v") if s in self.slots]

    def lut7(self) -> Lut7Table:
        pins = self.pins
        if self.is_root:
            fn = self.slots["o0"]
            pos = [pins.index(x) for x in fn.inputs]
            return Lut7Table.from_function(lambda *b: fn(*(b[p] for p in pos)))
        halves = []
        for slot in ("o1", "o2"):
            fn = self.slots.get(slot)
            if fn is None:
                halves.append(0)
                continue
            pos = [pins.index(x) for x in fn.inputs]
            halves.append(truth_table(lambda *b: fn(*(b[p] for p in pos)), HALF_INPUTS))
        return Lut7Table.from_halves(*halves)

    def lut2(self) -> Lut2Table:
        fn = self.slots.get("v")
        if fn is None:
            return Lut2Table(0)
        o1, o2 = self.slots["o1"].output, self.slots["o2"].output
        bits = 0
        for b1, b2 in product((0, 1), repeat=2):
            value = {o1: b1, o2: b2}
            if fn(*(value[x] for x in fn.inputs)):
                bits |= 1 << (2 * b2 + b1)
        return Lut2Table(bits)

    def config(self) -> LeConfig:
        return LeConfig(self.lut7(), self.lut2())


@dataclass(frozen=True)
class PdeBinding:
    name: str
    input: str
    output: str
    k: int


@dataclass
class Cluster:
    les: list[LeAssignment] = field(default_factory=list)
    pde: PdeBinding | None = None

    def produced(self) -> dict[str, tuple]:
        """Net -> ("le", le_index, slot) | ("pde",) for nets generated inside."""
        out: dict[str, tuple] = {}
        for i, le in enumerate(self.les):
            for net, slot in le.output_nets().items():
                out[net] = ("le", i, slot)
        if self.pde:
            out[self.pde.output] = ("pde",)
        return out

    def consumed(self) -> set[str]:
        nets = set()
        for le in self.les:
            nets |= le.input_nets()
        if self.pde:
            nets.add(self.pde.input)
        return nets

    def slots_used(self) -> int:
        return sum(len(le.slots) for le in self.les)


@dataclass
class Packing:
    netlist: Netlist
    clusters: list[Cluster]
    im_plan: list[tuple[int, str, str]]
    stats: dict

    def external_io(self, index: int) -> tuple[list[str], list[str]]:
        """Nets needing a PLB input pin and a PLB output pin for cluster ``index``."""
        return _cluster_io(self.clusters[index], _consumers(self.netlist), set(self.netlist.outputs))


def _consumers(n: Netlist) -> dict[str, set[str]]:
    cons: dict[str, set[str]] = {}
    for g in n.gates:
        for x in g.inputs:
            cons.setdefault(x, set()).add(g.name)
        if g.kind.stateful:
            cons.setdefault(g.output, set()).add(g.name)
    return cons


def _cluster_io(cluster: Cluster, consumers, out_ports) -> tuple[list[str], list[str]]:
    produced = cluster.produced()
    inside = {fn.name for le in cluster.les for fn in le.functions()}
    if cluster.pde:
        inside.add(cluster.pde.name)
    ins = sorted(cluster.consumed() - set(produced))
    outs = sorted(
        net for net in produced if net in out_ports or consumers.get(net, set()) - inside
    )
    return ins, outs


def _fits_half(le: LeAssignment, fn: LeFunction) -> bool:
    return not le.is_root and len(le.input_nets() | set(fn.inputs)) <= HALF_INPUTS


def pack(funcs: list[LeFunction], netlist: Netlist, plb_inputs: int = 12, plb_outputs: int = 8) -> Packing:
    """Greedy packing; deterministic with ties broken by instance name."""
    order = sorted(funcs, key=lambda f: (-len(set(f.inputs)), f.name))
    by_output = {f.output: f for f in funcs}
    placed: set[str] = set()
    les: list[LeAssignment] = []

    # validity pairs first: a 2-input function of two half functions rides in v
    for fn in sorted(funcs, key=lambda f: f.name):
        if len(fn.inputs) != 2 or fn.feedback or fn.name in placed:
            continue
        p, q = (by_output.get(x) for x in fn.inputs)
        if p is None or q is None or p is q or {p.name, q.name} & placed or fn in (p, q):
            continue
        if p.tap != "half" or q.tap != "half" or len(set(p.inputs) | set(q.inputs)) > HALF_INPUTS:
            continue
        les.append(LeAssignment({"o1": p, "o2": q, "v": fn}))
        placed |= {p.name, q.name, fn.name}

    for fn in order:
        if fn.name in placed:
            continue
        placed.add(fn.name)
        if fn.tap == "root":
            les.append(LeAssignment({"o0": fn}))
            continue
        best, best_score = None, -1
        for i, le in enumerate(les):
            free = [s for s in ("o1", "o2") if s not in le.slots]
            if not free or not _fits_half(le, fn):
                continue
            outs = le.output_nets()
            score = len(le.input_nets() & set(fn.inputs))
            score += sum(1 for x in fn.inputs if x in outs) + sum(1 for x in le.input_nets() if x == fn.output)
            if score > best_score:
                best, best_score = i, score
        if best is None:
            les.append(LeAssignment({"o1": fn}))
        else:
            le = les[best]
            le.slots["o1" if "o1" not in le.slots else "o2"] = fn

    consumers = _consumers(netlist)
    out_ports = set(netlist.outputs)

    def fits(cluster: Cluster) -> bool:
        ins, outs = _cluster_io(cluster, consumers, out_ports)
        return len(ins) <= plb_inputs and len(outs) <= plb_outputs

    def link_score(a: Cluster, b: Cluster) -> int:
        na = a.consumed() | set(a.produced())
        nb = b.consumed() | set(b.produced())
        return len(na & nb)

    clusters: list[Cluster] = []
    taken = [False] * len(les)
    for i, le in enumerate(les):
        if taken[i]:
            continue
        taken[i] = True
        cluster = Cluster([le])
        best, best_score = None, -1
        for j in range(i + 1, len(les)):
            if taken[j]:
                continue
            trial = Cluster([le, les[j]])
            if not fits(trial):
                continue
            s = link_score(cluster, Cluster([les[j]]))
            if s > best_score:
                best, best_score = j, s
        if best is not None:
            taken[best] = True
            cluster.les.append(les[best])
        clusters.append(cluster)

    channel_mates: dict[str, set[str]] = {}
    for ch in netlist.channels:
        if isinstance(ch, BundledChannel):
            for net in ch.data_nets:
                channel_mates.setdefault(net, set()).update(ch.data_nets)

    for g in sorted((g for g in netlist.gates if g.kind.name == "PDEL"), key=lambda g: g.name):
        binding = PdeBinding(g.name, g.inputs[0], g.output, g.kind.k or 0)
        related = {binding.input, binding.output}
        related |= channel_mates.get(binding.input, set()) | channel_mates.get(binding.output, set())
        target = None
        for cluster in clusters:
            if cluster.pde is not None:
                continue
            if not related & (cluster.consumed() | set(cluster.produced())):
                continue
            cluster.pde = binding
            if fits(cluster):
                target = cluster
                break
            cluster.pde = None
        if target is None:
            clusters.append(Cluster([], binding))

    im_plan = _im_plan(clusters)
    packing = Packing(netlist, clusters, im_plan, {})
    packing.stats = {
        "slots_used": sum(c.slots_used() for c in clusters),
        "les_occupied": sum(len(c.les) for c in clusters),
        "plbs_occupied": sum(1 for c in clusters if c.slots_used() or c.pde),
        "pdes_bound": sum(1 for c in clusters if c.pde),
    }
    packing.stats["filling_ratio"] = filling_ratio(packing)
    return packing


def _im_plan(clusters: list[Cluster]) -> list[tuple[int, str, str]]:
    plan = []
    for ci, cluster in enumerate(clusters):
        produced = cluster.produced()

        def source(net):
            src = produced[net]
            return "pde.out" if src[0] == "pde" else f"{'AB'[src[1]]}.{src[2]}"

        for li, le in enumerate(cluster.les):
            for k, net in enumerate(le.pins):
                if net is not None and net in produced:
                    plan.append((ci, f"{'AB'[li]}.i{k}", source(net)))
        if cluster.pde and cluster.pde.input in produced:
            plan.append((ci, "pde.in", source(cluster.pde.input)))
    return plan


def filling_ratio(p: Packing) -> float:
    """Used LE output slots over 8 slots per occupied PLB (0 when nothing is occupied)."""
    occupied = [c for c in p.clusters if c.slots_used() or c.pde]
    if not occupied:
        return 0.0
    return sum(c.slots_used() for c in occupied) / (SLOTS_PER_PLB * len(occupied))


def check_packing(p: Packing, plb_inputs: int = 12, plb_outputs: int = 8) -> list[Diagnostic]:
    """Prove slot legality by exhaustively evaluating every configured LE."""
    diags = []
    seen: dict[str, int] = {}
    consumers = _consumers(p.netlist)
    out_ports = set(p.netlist.outputs)
    for ci, cluster in enumerate(p.clusters):
        if len(cluster.les) > 2:
            diags.append(Diagnostic("too-many-les", f"cluster {ci} holds {len(cluster.les)} LEs"))
        ins, outs = _cluster_io(cluster, consumers, out_ports)
        if len(ins) > plb_inputs or len(outs) > plb_outputs:
            diags.append(Diagnostic("pin-budget", f"cluster {ci} needs {len(ins)} in / {len(outs)} out pins"))
        if cluster.pde:
            seen[cluster.pde.name] = seen.get(cluster.pde.name, 0) + 1
        for li, le in enumerate(cluster.les):
            where = f"cluster {ci} LE {'AB'[li]}"
            pins = le.pins
            nets = [x for x in pins if x is not None]
            if len(nets) > LE_INPUTS:
                diags.append(Diagnostic("input-budget", f"{where} uses {len(nets)} inputs"))
                continue
            local = []
            if le.is_root and any(s in le.slots for s in ("o1", "o2", "v")):
                local.append(Diagnostic("tap-conflict", f"{where}: root function shares the LE"))
            for slot, fn in le.slots.items():
                seen[fn.name] = seen.get(fn.name, 0) + 1
                if slot in ("o1", "o2") and any(pins.index(x) >= HALF_INPUTS for x in fn.inputs):
                    local.append(Diagnostic("tap-class", f"{where}: {fn.name} on {slot} uses i6"))
            if "v" in le.slots and not ("o1" in le.slots and "o2" in le.slots):
                local.append(Diagnostic("tap-class", f"{where}: v used without both halves"))
            if local:
                diags.extend(local)
                continue
            cfg = le.config()
            slot_index = {"o0": 0, "o1": 1, "o2": 2, "v": 3}
            for bits in product((0, 1), repeat=LE_INPUTS):
                outs_le = eval_le(cfg, bits)
                value = {x: bits[k] for k, x in enumerate(pins) if x is not None}
                for slot, fn in le.slots.items():
                    if slot == "v":
                        half = {le.slots["o1"].output: outs_le[1], le.slots["o2"].output: outs_le[2]}
                        want = fn(*(half[x] for x in fn.inputs))
                    else:
                        want = fn(*(value[x] for x in fn.inputs))
                    if outs_le[slot_index[slot]] != want:
                        diags.append(Diagnostic("function-mismatch", f"{where}: {fn.name} on {slot}"))
                        break
                else:
                    continue
                break
    produced_inside = {(ci, sink) for ci, sink, _ in p.im_plan}
    for ci, cluster in enumerate(p.clusters):
        for li, le in enumerate(cluster.les):
            for fn in le.functions():
                if fn.feedback:
                    k = le.pins.index(fn.output)
                    if (ci, f"{'AB'[li]}.i{k}") not in produced_inside:
                        diags.append(Diagnostic("missing-loop", f"feedback of {fn.name} not in im_plan"))
    expected = [g.name for g in p.netlist.gates]
    for name in expected:
        if seen.get(name, 0) != 1:
            diags.append(Diagnostic("coverage", f"{name} packed {seen.get(name, 0)} times"))
    return diags
