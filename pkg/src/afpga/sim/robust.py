"""Delay-insensitivity checks and path-delay helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .engine import DelayModel, run
from .model import HOP_DELAY, LUT_DELAY, SimModel


@dataclass
class Verdict:
    passed: bool
    trials: int
    nominal: dict[str, list[int]] = field(default_factory=dict)
    failed_trial: int | None = None
    channel: str | None = None
    token_index: int | None = None
    reason: str = ""
    max_hazards: int = 0

    def __str__(self):
        if self.passed:
            return f"PASS ({self.trials} trials, max hazards {self.max_hazards})"
        return (
            f"FAIL at trial {self.failed_trial}: {self.reason}"
            + (f" (channel {self.channel}, token {self.token_index})" if self.channel else "")
        )


def _first_divergence(ref: dict, got: dict):
    for ch in sorted(ref):
        a, b = ref[ch], got.get(ch, [])
        for i in range(max(len(a), len(b))):
            if i >= len(a) or i >= len(b) or a[i] != b[i]:
                return ch, i
    return None


def qdi_robustness(
    m: SimModel, tb, trials: int = 100, seed: int = 0, d_max: int = 10, t_max: int = 100_000
) -> Verdict:
    """Compare the token streams of ``trials`` randomised-delay runs with the nominal run."""
    ref = run(m, tb, DelayModel.nominal(), t_max)
    v = Verdict(True, trials, ref.tokens, max_hazards=len(ref.hazards))
    if ref.status != "complete":
        v.passed, v.failed_trial, v.reason = False, -1, f"nominal run {ref.status}"
        return v
    for trial in range(trials):
        tr = run(m, tb, DelayModel.randomized(seed, trial, d_max), t_max)
        v.max_hazards = max(v.max_hazards, len(tr.hazards))
        if tr.status != "complete":
            v.passed, v.failed_trial, v.reason = False, trial, tr.status
            return v
        div = _first_divergence(ref.tokens, tr.tokens)
        if div is not None:
            v.passed, v.failed_trial = False, trial
            v.channel, v.token_index = div
            v.reason = "token mismatch"
            return v
    return v


def max_path_delay(m: SimModel, sources: list[str], sinks: list[str]) -> int:
    """Longest nominal delay from any of ``sources`` to any of ``sinks``.

    Delay elements are excluded from paths; the result is the worst
    combinational depth that a matched delay must cover.  Cycles are cut.
    """
    edges: dict[int, list[tuple[int, int]]] = {}
    for e in m.luts:
        for s in set(e.inputs):
            for o in e.outputs:
                if o is not None:
                    edges.setdefault(s, []).append((o, LUT_DELAY))
    for e in m.forks:
        for out, hops in e.branches:
            edges.setdefault(e.input, [])
        ds = [HOP_DELAY * len(hops) for _, hops in e.branches]
        worst = max(ds, default=0)
        for out, _ in e.branches:
            edges[e.input].append((out, worst))
    targets = {m.ports[x] if x in m.ports else m.signal_id(x) for x in sinks}
    on_stack: set[int] = set()

    @lru_cache(maxsize=None)
    def longest(s: int) -> int | None:
        best = 0 if s in targets else None
        on_stack.add(s)
        for nxt, d in edges.get(s, ()):
            if nxt in on_stack:
                continue
            sub = longest(nxt)
            if sub is not None and (best is None or sub + d > best):
                best = sub + d
        on_stack.discard(s)
        return best

    results = [longest(m.ports[x] if x in m.ports else m.signal_id(x)) for x in sources]
    return max((r for r in results if r is not None), default=0)
