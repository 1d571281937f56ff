"""Value change dump output for traces."""

from __future__ import annotations

import re

from .engine import Trace


def _ident(i: int) -> str:
    # printable ASCII 33..126, little-endian base 94
    chars = []
    while True:
        chars.append(chr(33 + i % 94))
        i //= 94
        if i == 0:
            return "".join(chars)
        i -= 1


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.\[\]:@()]", "_", name)


def write_vcd(trace: Trace, signals: list[str] | None = None, scope: str = "top") -> str:
    """Render ``trace`` as VCD text (1 ns per time unit).  The output is deterministic."""
    names = trace.signals if signals is None else signals
    ids = {trace.signals.index(n): _ident(k) for k, n in enumerate(names)}
    lines = [
        "$version afpga $end",
        "$timescale 1ns $end",
        f"$scope module {scope} $end",
    ]
    for sid, code in ids.items():
        lines.append(f"$var wire 1 {code} {_safe(trace.signals[sid])} $end")
    lines += ["$upscope $end", "$enddefinitions $end", "#0", "$dumpvars"]
    for sid, code in ids.items():
        lines.append(f"{trace.initial[sid]}{code}")
    lines.append("$end")
    now = 0
    for t, _, s, v in trace.transitions:
        if s not in ids:
            continue
        if t != now:
            lines.append(f"#{t}")
            now = t
        lines.append(f"{v}{ids[s]}")
    if trace.end_time > now:
        lines.append(f"#{trace.end_time}")
    return "\n".join(lines) + "\n"
