"""Handshake environments and token extraction.

Input channels get a producer that follows the four-phase return-to-zero
protocol; output channels that share an acknowledge net get one consumer.
Designs without channels use a step stimulus: apply a vector, let the
circuit settle, sample the outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..netlist import BundledChannel, DualRailChannel, Netlist
from .model import SimModel

SETUP = 1


def _is_input(m: SimModel, ch) -> bool:
    return m.port_dirs.get(ch.data_nets[0]) == "in"


class _DualRailProducer:
    def __init__(self, sim, ch: DualRailChannel, script):
        self.t, self.f, self.ack = sim.sid(ch.t), sim.sid(ch.f), sim.sid(ch.ack)
        self.script = list(script)
        self.i = 0
        self.state = "idle"
        sim.watch(self.ack, self.on_ack)

    @property
    def done(self) -> bool:
        return self.i >= len(self.script) and self.state == "idle"

    def begin(self, sim):
        if self.i < len(self.script) and sim.values[self.ack] == 0:
            self.rail = self.t if self.script[self.i] else self.f
            sim.schedule(sim.now + sim.d.testbench, self.rail, 1)
            self.state = "valid"
        else:
            self.state = "idle"

    def on_ack(self, sim, _sig):
        ack = sim.values[self.ack]
        if self.state == "valid" and ack:
            sim.schedule(sim.now + sim.d.testbench, self.rail, 0)
            self.state = "spacer"
        elif self.state == "spacer" and not ack:
            self.i += 1
            self.begin(sim)


class _BundledProducer:
    def __init__(self, sim, ch: BundledChannel, script):
        self.req, self.ack = sim.sid(ch.req), sim.sid(ch.ack)
        self.data = [sim.sid(x) for x in ch.data]
        self.script = list(script)
        self.i = 0
        self.state = "idle"
        sim.watch(self.ack, self.on_ack)

    @property
    def done(self) -> bool:
        return self.i >= len(self.script) and self.state == "idle"

    def begin(self, sim):
        if self.i < len(self.script) and sim.values[self.ack] == 0:
            t = sim.now + sim.d.testbench
            word = self.script[self.i]
            for k, s in enumerate(self.data):
                sim.schedule(t, s, (word >> k) & 1)
            sim.schedule(t + SETUP, self.req, 1)
            self.state = "valid"
        else:
            self.state = "idle"

    def on_ack(self, sim, _sig):
        ack = sim.values[self.ack]
        if self.state == "valid" and ack:
            sim.schedule(sim.now + sim.d.testbench, self.req, 0)
            self.state = "spacer"
        elif self.state == "spacer" and not ack:
            self.i += 1
            self.begin(sim)


class _Consumer:
    """Acknowledges a group of output channels that share one ack net."""

    def __init__(self, sim, ack: str, channels):
        self.ack = sim.sid(ack)
        self.groups = []
        for ch in channels:
            if isinstance(ch, DualRailChannel):
                self.groups.append(("dr", sim.sid(ch.t), sim.sid(ch.f)))
            else:
                self.groups.append(("bd", sim.sid(ch.req), None))
        self.level = 0
        for g in self.groups:
            for s in g[1:]:
                if s is not None:
                    sim.watch(s, self.on_data)

    def _state(self, sim):
        v = sim.values
        ready = reset = True
        for kind, a, b in self.groups:
            if kind == "dr":
                ready &= v[a] ^ v[b] == 1
                reset &= v[a] == 0 and v[b] == 0
            else:
                ready &= v[a] == 1
                reset &= v[a] == 0
        return ready, reset

    def begin(self, sim):
        self.on_data(sim, None)

    def on_data(self, sim, _sig):
        ready, reset = self._state(sim)
        if self.level == 0 and ready:
            sim.schedule(sim.now + sim.d.testbench, self.ack, 1)
            self.level = 1
        elif self.level == 1 and reset:
            sim.schedule(sim.now + sim.d.testbench, self.ack, 0)
            self.level = 0

    @property
    def done(self) -> bool:
        return self.level == 0


@dataclass
class Testbench:
    """Token scripts for input channels, or a list of step vectors.

    ``tokens`` maps input channel names to values (0/1 for dual-rail, an
    integer with the first data bit as LSB for bundled).  ``steps`` is a list
    of ``{port: value}`` vectors applied one at a time; after each vector
    settles the ports in ``sample`` are recorded in ``Trace.samples``.
    """

    __test__ = False  # keep pytest from collecting it

    tokens: dict[str, list[int]] = field(default_factory=dict)
    steps: list[dict[str, int]] | None = None
    sample: tuple[str, ...] = ()

    def run(self, sim, t_max: int) -> str:
        if self.steps is not None:
            return self._run_steps(sim, t_max)
        m = sim.model
        agents = []
        for ch in m.channels:
            if _is_input(m, ch):
                cls = _DualRailProducer if isinstance(ch, DualRailChannel) else _BundledProducer
                agents.append(cls(sim, ch, self.tokens.get(ch.name, ())))
        consumers: dict[str, list] = {}
        for ch in m.channels:
            if not _is_input(m, ch):
                consumers.setdefault(ch.ack, []).append(ch)
        agents += [_Consumer(sim, ack, chs) for ack, chs in consumers.items()]
        for a in agents:
            a.begin(sim)
        while True:
            t = sim.next_time()
            if t is None:
                break
            if t > t_max:
                return "timeout"
            sim.step()
        return "complete" if all(a.done for a in agents) else "deadlock"

    def _run_steps(self, sim, t_max: int) -> str:
        for vec in self.steps:
            for name, v in vec.items():
                sim.poke(name, v, sim.d.testbench)
            if not sim.settle(t_max):
                return "timeout"
            sim.trace.samples.append({o: sim.peek(o) for o in self.sample})
        return "complete"


def default_tokens(n: Netlist, limit: int = 16) -> dict[str, list[int]]:
    """Walk the joint value space of all input channels (mixed radix, first channel fastest)."""
    ins = [ch for ch in n.channels if n.channel_direction(ch) == "in"]
    radix = [2 if isinstance(ch, DualRailChannel) else 1 << len(ch.data) for ch in ins]
    total = 1
    for r in radix:
        total *= r
    count = min(total, limit)
    out: dict[str, list[int]] = {ch.name: [] for ch in ins}
    for i in range(count):
        x = i
        for ch, r in zip(ins, radix):
            out[ch.name].append(x % r)
            x //= r
    return out


def default_steps(n: Netlist) -> list[dict[str, int]]:
    """Gray-code walk over all input vectors, returning to all-zero."""
    ins = n.inputs
    vecs = []
    for i in range(1, 1 << len(ins)):
        g = i ^ (i >> 1)
        vecs.append({x: (g >> k) & 1 for k, x in enumerate(ins)})
    vecs.append({x: 0 for x in ins})
    return vecs


def default_testbench(n: Netlist, tokens: dict[str, list[int]] | None = None) -> Testbench:
    if n.channels:
        return Testbench(tokens=tokens if tokens is not None else default_tokens(n))
    return Testbench(steps=default_steps(n), sample=n.outputs)


def extract_tokens(trace, m: SimModel) -> dict[str, list[int]]:
    """Tokens seen on every channel, replayed from the trace.

    A dual-rail token is the rail that rises from the spacer state (``-1``
    marks both rails high).  A bundled token is the data word at the end of
    the time step in which ``req`` rises.
    """
    vals = list(trace.initial)
    watch: dict[int, list] = {}
    out: dict[str, list[int]] = {}
    bundled_at: list = []
    for ch in m.channels:
        out[ch.name] = []
        if isinstance(ch, DualRailChannel):
            t, f = m.ports[ch.t], m.ports[ch.f]
            watch.setdefault(t, []).append(("dr", ch.name, t, f))
            watch.setdefault(f, []).append(("dr", ch.name, t, f))
        else:
            req = m.ports[ch.req]
            watch.setdefault(req, []).append(("bd", ch.name, req, [m.ports[x] for x in ch.data]))

    def flush():
        for name, data in bundled_at:
            out[name].append(sum(vals[s] << k for k, s in enumerate(data)))
        bundled_at.clear()

    now = None
    for t, _, s, v in trace.transitions:
        if t != now:
            flush()
            now = t
        old = vals[s]
        vals[s] = v
        for kind, name, a, b in watch.get(s, ()):
            if kind == "dr":
                other = vals[b] if s == a else vals[a]
                if v and not old:
                    out[name].append(-1 if other else (1 if s == a else 0))
            elif v and not old:
                bundled_at.append((name, b))
    flush()
    return out
