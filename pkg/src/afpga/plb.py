"""Programmable logic block: interconnection matrix, two logic elements, one PDE.

Each logic element (LE) is a 7-input LUT with three outputs plus a LUT2.  The
LUT is a multiplexer tree with ``i0`` at the leaves and ``i6`` at the root; the
two depth-1 nodes are brought out as auxiliary outputs:

    o1 = table[0, i5..i0]      o2 = table[1, i5..i0]      o0 = o2 if i6 else o1

so ``o1``/``o2`` are two independent 6-input functions of the shared inputs
``i0..i5`` and ``o0`` is the full 7-input function.  The LUT2 is hard-wired to
``(o2, o1)`` and produces the validity output ``v = lut2[2*o2 + o1]``.

IM numbering (shown for the default 12 inputs / 8 outputs)::

    sources  0 const-0   1 const-1   2..13 PLB inputs
             14..17 LE-A o0,o1,o2,v   18..21 LE-B o0,o1,o2,v   22 PDE out
    sinks    0..6 LE-A i0..i6   7..13 LE-B i0..i6   14 PDE in   15..22 PLB outputs

Constant-0 is source 0 so that an all-zero configuration is the reset state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import Diagnostic, InvalidConfigError, InvalidSinkError

LUT7_BITS = 128
LE_INPUTS = 7
LE_OUTPUTS = ("o0", "o1", "o2", "v")
PDE_MAX = 15


@dataclass(frozen=True)
class Lut7Table:
    bits: int = 0

    def __post_init__(self):
        if not 0 <= self.bits < (1 << LUT7_BITS):
            raise InvalidConfigError("LUT7 table must hold exactly 128 bits")

    def __getitem__(self, index: int) -> int:
        return (self.bits >> index) & 1

    @classmethod
    def from_function(cls, fn: Callable[..., int]) -> "Lut7Table":
        """Tabulate ``fn(i0, ..., i6)`` over all 128 input vectors."""
        bits = 0
        for idx in range(LUT7_BITS):
            if fn(*((idx >> k) & 1 for k in range(7))):
                bits |= 1 << idx
        return cls(bits)

    @classmethod
    def from_halves(cls, low: int, high: int) -> "Lut7Table":
        """Build from the 64-entry o1 table (i6=0) and o2 table (i6=1)."""
        return cls((low & (2**64 - 1)) | ((high & (2**64 - 1)) << 64))

    def to_array(self) -> np.ndarray:
        return np.array([(self.bits >> i) & 1 for i in range(LUT7_BITS)], dtype=np.uint8)


@dataclass(frozen=True)
class Lut2Table:
    bits: int = 0

    def __post_init__(self):
        if not 0 <= self.bits < 16:
            raise InvalidConfigError("LUT2 table must hold exactly 4 bits")

    def __getitem__(self, index: int) -> int:
        return (self.bits >> index) & 1


LUT2_OR = Lut2Table(0b1110)
LUT2_AND = Lut2Table(0b1000)


@dataclass(frozen=True)
class LeConfig:
    lut7: Lut7Table = Lut7Table()
    lut2: Lut2Table = Lut2Table()


@dataclass(frozen=True)
class PdeConfig:
    k: int = 0

    def __post_init__(self):
        if not 0 <= self.k <= PDE_MAX:
            raise InvalidConfigError(f"PDE delay code must be in 0..{PDE_MAX}, got {self.k}")


@dataclass(frozen=True)
class ImLayout:
    """Index arithmetic for the IM of a PLB with the given pin counts."""

    n_inputs: int = 12
    n_outputs: int = 8

    @property
    def n_sources(self) -> int:
        return 2 + self.n_inputs + 8 + 1

    @property
    def n_sinks(self) -> int:
        return 2 * LE_INPUTS + 1 + self.n_outputs

    @property
    def select_width(self) -> int:
        return max(1, (self.n_sources - 1).bit_length())

    # sources
    CONST0 = 0
    CONST1 = 1

    def src_input(self, k: int) -> int:
        return 2 + k

    def src_le(self, le: int, out: int) -> int:
        return 2 + self.n_inputs + 4 * le + out

    @property
    def src_pde(self) -> int:
        return 2 + self.n_inputs + 8

    # sinks
    @staticmethod
    def sink_le(le: int, pin: int) -> int:
        return LE_INPUTS * le + pin

    SINK_PDE = 2 * LE_INPUTS

    def sink_output(self, k: int) -> int:
        return 2 * LE_INPUTS + 1 + k

    def describe_source(self, s: int) -> tuple:
        """Decode a source index to ``("const", v) | ("in", k) | ("le", le, out) | ("pde",)``."""
        if s < 2:
            return ("const", s)
        s -= 2
        if s < self.n_inputs:
            return ("in", s)
        s -= self.n_inputs
        if s < 8:
            return ("le", s // 4, s % 4)
        if s == 8:
            return ("pde",)
        raise InvalidConfigError(f"source index out of range: {s + 2 + self.n_inputs}")

    def describe_sink(self, s: int) -> tuple:
        """Decode a sink index to ``("le", le, pin) | ("pde",) | ("out", k)``."""
        if not 0 <= s < self.n_sinks:
            raise InvalidSinkError(f"sink index {s} outside 0..{self.n_sinks - 1}")
        if s < 2 * LE_INPUTS:
            return ("le", s // LE_INPUTS, s % LE_INPUTS)
        if s == self.SINK_PDE:
            return ("pde",)
        return ("out", s - 2 * LE_INPUTS - 1)

    def source_name(self, s: int) -> str:
        d = self.describe_source(s)
        if d[0] == "const":
            return f"const{d[1]}"
        if d[0] == "in":
            return f"in{d[1]}"
        if d[0] == "le":
            return f"{'AB'[d[1]]}.{LE_OUTPUTS[d[2]]}"
        return "pde.out"

    def sink_name(self, s: int) -> str:
        d = self.describe_sink(s)
        if d[0] == "le":
            return f"{'AB'[d[1]]}.i{d[2]}"
        if d[0] == "pde":
            return "pde.in"
        return f"out{d[1]}"


DEFAULT_LAYOUT = ImLayout()


@dataclass(frozen=True)
class ImConfig:
    selection: tuple[int, ...] = ()
    layout: ImLayout = DEFAULT_LAYOUT

    def __post_init__(self):
        if not self.selection:
            object.__setattr__(self, "selection", (ImLayout.CONST0,) * self.layout.n_sinks)
        elif len(self.selection) != self.layout.n_sinks:
            raise InvalidConfigError(
                f"IM needs {self.layout.n_sinks} selections, got {len(self.selection)}"
            )
        else:
            object.__setattr__(self, "selection", tuple(int(s) for s in self.selection))

    def with_links(self, links: dict[int, int]) -> "ImConfig":
        sel = list(self.selection)
        for sink, src in links.items():
            self.layout.describe_sink(sink)
            sel[sink] = src
        return ImConfig(tuple(sel), self.layout)


@dataclass(frozen=True)
class PlbConfig:
    le_a: LeConfig = LeConfig()
    le_b: LeConfig = LeConfig()
    pde: PdeConfig = PdeConfig()
    im: ImConfig = field(default_factory=ImConfig)

    @classmethod
    def default(cls, n_inputs: int = 12, n_outputs: int = 8) -> "PlbConfig":
        return cls(im=ImConfig(layout=ImLayout(n_inputs, n_outputs)))

    @property
    def les(self) -> tuple[LeConfig, LeConfig]:
        return (self.le_a, self.le_b)


def lut_index(inputs: Sequence[int]) -> int:
    idx = 0
    for k, b in enumerate(inputs):
        if b:
            idx |= 1 << k
    return idx


def eval_lut7_3(table: Lut7Table, inputs: Sequence[int]) -> tuple[int, int, int]:
    idx = lut_index(inputs)
    low = idx & 63
    o1 = (table.bits >> low) & 1
    o2 = (table.bits >> (low | 64)) & 1
    return (o2 if idx & 64 else o1), o1, o2


def eval_le(config: LeConfig, inputs: Sequence[int]) -> tuple[int, int, int, int]:
    o0, o1, o2 = eval_lut7_3(config.lut7, inputs)
    return o0, o1, o2, config.lut2[2 * o2 + o1]


def eval_lut7_3_batch(table: Lut7Table, inputs: np.ndarray) -> np.ndarray:
    """Vectorised ``eval_lut7_3`` over an ``(n, 7)`` array of input bits."""
    bits = table.to_array()
    weights = 1 << np.arange(7)
    idx = np.asarray(inputs, dtype=np.int64) @ weights
    low = idx & 63
    o1 = bits[low]
    o2 = bits[low | 64]
    o0 = np.where(idx & 64, o2, o1)
    return np.stack([o0, o1, o2], axis=1)


def im_resolve(im: ImConfig, sink: int) -> int:
    im.layout.describe_sink(sink)
    return im.selection[sink]


def validate_plb_config(cfg: PlbConfig) -> list[Diagnostic]:
    """Check selector ranges and reject loops that avoid every LE.

    A loop through the IM that never enters an LE is combinational; it is
    reported unless a PDE with nonzero delay sits on it.
    """
    diags: list[Diagnostic] = []
    layout = cfg.im.layout
    for sink, src in enumerate(cfg.im.selection):
        if not 0 <= src < layout.n_sources:
            diags.append(Diagnostic("bad-selector", f"{layout.sink_name(sink)} selects {src}"))
    if diags:
        return diags

    # PDE is the only non-LE block whose output can reach its own input.
    if cfg.pde.k == 0 and cfg.im.selection[layout.SINK_PDE] == layout.src_pde:
        diags.append(Diagnostic("zero-delay-loop", "pde.in <- pde.out with k=0"))
    return diags
