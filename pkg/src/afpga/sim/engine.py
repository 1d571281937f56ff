"""Discrete-event simulation with inertial LUT delays and transport wires.

Events at one time step are applied in batches (delta cycles): every event
due at ``t`` is applied, then each element touched by a change is evaluated
once, in first-touch order.  New zero-delay events at ``t`` start another
delta.  LUT outputs use inertial delay: if an output re-evaluates to its
current value while a change is pending, the pending event is cancelled and
a hazard record is kept.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .model import HOP_DELAY, LUT_DELAY, SimModel

TB_DELAY = 1


@dataclass(frozen=True)
class HazardRecord:
    signal: str
    time: int
    kind: str = "absorbed-pulse"


@dataclass(frozen=True)
class DelayModel:
    """Nominal delays, or uniform integer delays in ``[1, d_max]`` per trial.

    ``overrides`` pins the delay of named LUT elements or hops (``"wire:x"``,
    ``"im:r,c:s"``, ``"seg:n"``) and wins over randomisation.  Delay elements
    always keep their configured ``k``.  With ``isochronic`` set, every
    branch of a fork gets the delay of its slowest branch.
    """

    kind: str = "nominal"
    seed: int = 0
    trial: int = 0
    d_max: int = 10
    overrides: tuple[tuple[str, int], ...] = ()
    isochronic: bool = True

    @classmethod
    def nominal(cls, overrides: dict | None = None, isochronic: bool = True) -> "DelayModel":
        return cls("nominal", overrides=tuple(sorted((overrides or {}).items())), isochronic=isochronic)

    @classmethod
    def randomized(cls, seed: int, trial: int = 0, d_max: int = 10, overrides: dict | None = None) -> "DelayModel":
        return cls("random", seed, trial, d_max, tuple(sorted((overrides or {}).items())))

    def resolve(self, m: SimModel) -> "ResolvedDelays":
        over = dict(self.overrides)
        rng = np.random.default_rng([self.seed, self.trial]) if self.kind == "random" else None

        def draw(nominal: int) -> int:
            if rng is None:
                return nominal
            return int(rng.integers(1, self.d_max + 1))

        lut = []
        for e in m.luts:
            d = draw(LUT_DELAY)
            lut.append(over.get(e.name, d))
        hop = {}
        for h in m.hops:
            d = draw(HOP_DELAY)
            hop[h] = over.get(h, d)
        forks = []
        for e in m.forks:
            ds = [sum(hop[h] for h in hops) for _, hops in e.branches]
            if e.name in over:
                ds = [over[e.name]] * len(ds)
            elif self.isochronic and ds:
                ds = [max(ds)] * len(ds)
            forks.append(tuple(ds))
        tb = draw(TB_DELAY)
        return ResolvedDelays(lut, forks, [e.k for e in m.delays], over.get("testbench", tb))


@dataclass
class ResolvedDelays:
    lut: list[int]
    fork: list[tuple[int, ...]]
    delay: list[int]
    testbench: int = TB_DELAY


@dataclass
class Trace:
    signals: list[str]
    initial: list[int]
    transitions: list[tuple[int, int, int, int]] = field(default_factory=list)  # (time, seq, signal, value)
    hazards: list[HazardRecord] = field(default_factory=list)
    samples: list[dict[str, int]] = field(default_factory=list)
    status: str = "complete"
    end_time: int = 0
    tokens: dict[str, list[int]] = field(default_factory=dict)

    def changes(self, name: str) -> list[tuple[int, int]]:
        sid = self.signals.index(name)
        return [(t, v) for t, _, s, v in self.transitions if s == sid]

    def final_values(self) -> dict[str, int]:
        vals = list(self.initial)
        for _, _, s, v in self.transitions:
            vals[s] = v
        return dict(zip(self.signals, vals))


class Simulator:
    """Event engine over one model and one set of resolved delays."""

    def __init__(self, m: SimModel, delays: ResolvedDelays, fanout=None):
        self.model = m
        self.d = delays
        self.values = list(m.initial)
        self.fanout = fanout if fanout is not None else m.fanout()
        self.watchers: list[list] = [[] for _ in m.signals]
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self._pending: dict[tuple[int, int], tuple[int, int]] = {}
        self._cancelled: set[int] = set()
        self.trace = Trace(list(m.signals), list(m.initial))
        self._started = False

    def watch(self, sig: int, callback) -> None:
        self.watchers[sig].append(callback)

    def schedule(self, t: int, sig: int, value: int, origin=None) -> int:
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, sig, value, origin))
        return self._seq

    def sid(self, name: str) -> int:
        """Signal id of a port name or an internal signal name."""
        ports = self.model.ports
        return ports[name] if name in ports else self.model.signal_id(name)

    def poke(self, name: str, value: int, delay: int = 0) -> None:
        self.schedule(self.now + delay, self.sid(name), value)

    def peek(self, name: str) -> int:
        return self.values[self.sid(name)]

    @property
    def idle(self) -> bool:
        return not self._heap

    def next_time(self) -> int | None:
        while self._heap and self._heap[0][1] in self._cancelled:
            self._cancelled.discard(heapq.heappop(self._heap)[1])
        return self._heap[0][0] if self._heap else None

    def _eval_lut(self, i: int) -> None:
        e = self.model.luts[i]
        vals = self.values
        idx = 0
        for k, s in enumerate(e.inputs):
            idx |= vals[s] << k
        for j, out in enumerate(e.outputs):
            if out is None:
                continue
            v = (e.tables[j] >> idx) & 1
            key = (i, j)
            p = self._pending.get(key)
            if p is not None:
                if p[1] == v:
                    continue
                self._cancelled.add(p[0])
                del self._pending[key]
                self.trace.hazards.append(HazardRecord(self.model.signals[out], self.now))
            elif v != vals[out]:
                self._pending[key] = (self.schedule(self.now + self.d.lut[i], out, v, key), v)

    def _evaluate(self, touched: dict) -> None:
        vals = self.values
        for kind, i in touched:
            if kind == "lut":
                self._eval_lut(i)
            elif kind == "fork":
                e = self.model.forks[i]
                v = vals[e.input]
                for (out, _), d in zip(e.branches, self.d.fork[i]):
                    self.schedule(self.now + d, out, v)
            elif kind == "delay":
                e = self.model.delays[i]
                self.schedule(self.now + self.d.delay[i], e.output, vals[e.input])

    def start(self) -> None:
        """Evaluate every LUT once so outputs settle from the all-zero reset state."""
        if self._started:
            return
        self._started = True
        self._evaluate({("lut", i): None for i in range(len(self.model.luts))})
        # drivers with a non-zero reset value (const1) propagate too
        touched = {}
        for s, v in enumerate(self.values):
            if v:
                for el in self.fanout[s]:
                    touched.setdefault(el)
        self._evaluate(touched)

    def step(self) -> bool:
        """Process every event (all delta cycles) at the next event time."""
        self.start()
        t = self.next_time()
        if t is None:
            return False
        self.now = t
        heap, vals, trans = self._heap, self.values, self.trace.transitions
        while heap and heap[0][0] == t:
            touched: dict = {}
            notify: dict = {}
            while heap and heap[0][0] == t:
                _, seq, sig, v, origin = heapq.heappop(heap)
                if seq in self._cancelled:
                    self._cancelled.discard(seq)
                    continue
                if origin is not None:
                    self._pending.pop(origin, None)
                if vals[sig] != v:
                    vals[sig] = v
                    trans.append((t, seq, sig, v))
                    for el in self.fanout[sig]:
                        touched.setdefault(el)
                    if self.watchers[sig]:
                        notify.setdefault(sig)
            self._evaluate(touched)
            for sig in notify:
                for cb in self.watchers[sig]:
                    cb(self, sig)
        return True

    def settle(self, t_max: int) -> bool:
        """Run until no events remain; ``False`` if ``t_max`` is reached first."""
        self.start()
        while True:
            t = self.next_time()
            if t is None:
                return True
            if t > t_max:
                return False
            self.step()


def run(m: SimModel, tb, d: DelayModel | None = None, t_max: int = 100_000, resolved: ResolvedDelays | None = None) -> Trace:
    """Simulate ``m`` under testbench ``tb`` and return the trace."""
    from .testbench import extract_tokens

    d = d or DelayModel.nominal()
    sim = Simulator(m, resolved or d.resolve(m))
    if not sim.settle(t_max):
        sim.trace.status = "timeout"
        sim.trace.end_time = sim.now
        return sim.trace
    status = tb.run(sim, t_max)
    sim.trace.status = status
    sim.trace.end_time = sim.now
    if m.channels:
        sim.trace.tokens = extract_tokens(sim.trace, m)
    return sim.trace
