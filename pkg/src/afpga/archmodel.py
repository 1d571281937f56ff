"""Island-style fabric topology and the routing-resource graph built on it.

Geometry conventions (row 0 is the top row):

* PLB ``(r, c)`` for ``0 <= r < rows`` and ``0 <= c < cols``.
* Switch box ``(i, j)`` for ``0 <= i <= rows`` and ``0 <= j <= cols``; it sits at
  the corner shared by up to four PLBs.
* Horizontal segment ``H(h, c)`` runs between switch boxes ``(h, c)`` and
  ``(h, c + 1)``; it is the north side of PLB ``(h, c)`` and the south side of
  PLB ``(h - 1, c)``.
* Vertical segment ``V(v, r)`` runs between switch boxes ``(r, v)`` and
  ``(r + 1, v)``; it is the west side of PLB ``(r, v)`` and the east side of
  PLB ``(r, v - 1)``.

PLB pins are spread round-robin over the sides N, E, S, W: pin ``k`` sits on
side ``k % 4``.  Every configurable switch in the fabric (switch-box pass
switches and connection-box pin/track switches) gets a canonical index; that
index is also its bit position in the routing part of a bitstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

from .errors import InvalidParamsError

SIDES = ("N", "E", "S", "W")


@dataclass(frozen=True)
class FabricParams:
    rows: int
    cols: int
    channel_width: int
    plb_inputs: int = 12
    plb_outputs: int = 8

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise InvalidParamsError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.channel_width < 1:
            raise InvalidParamsError(f"channel width must be >= 1, got {self.channel_width}")
        for name in ("plb_inputs", "plb_outputs"):
            n = getattr(self, name)
            if n < 4 or n % 4:
                raise InvalidParamsError(f"{name} must be a positive multiple of 4, got {n}")
        # 5-bit IM selectors and the u16 header fields bound the pin counts
        if self.plb_inputs > 4096 or self.plb_outputs > 4096:
            raise InvalidParamsError("pin count too large")
        if max(self.rows, self.cols, self.channel_width) > 0xFFFF:
            raise InvalidParamsError("dimension does not fit the 16-bit header field")

    @property
    def pins_per_side(self) -> tuple[int, int]:
        return self.plb_inputs // 4, self.plb_outputs // 4


class PinNode(NamedTuple):
    kind: str  # "in" or "out"
    row: int
    col: int
    index: int

    @property
    def side(self) -> int:
        return self.index % 4


class SegNode(NamedTuple):
    orient: str  # "H" or "V"
    chan: int
    pos: int
    track: int

    @property
    def group(self) -> tuple[str, int, int]:
        return (self.orient, self.chan, self.pos)


def plb_side_group(row: int, col: int, side: int) -> tuple[str, int, int]:
    """Channel segment group adjacent to one side of a PLB."""
    if side == 0:
        return ("H", row, col)
    if side == 1:
        return ("V", col + 1, row)
    if side == 2:
        return ("H", row + 1, col)
    return ("V", col, row)


def sb_side_group(params: FabricParams, i: int, j: int, side: int):
    """Segment group on one side of switch box (i, j), or None at the fabric edge."""
    if side == 0:
        return ("V", j, i - 1) if i >= 1 else None
    if side == 1:
        return ("H", i, j) if j < params.cols else None
    if side == 2:
        return ("V", j, i) if i < params.rows else None
    return ("H", i, j - 1) if j >= 1 else None


def group_switch_boxes(group: tuple[str, int, int]) -> tuple[tuple[int, int], tuple[int, int]]:
    orient, chan, pos = group
    if orient == "H":
        return (chan, pos), (chan, pos + 1)
    return (pos, chan), (pos + 1, chan)


@dataclass(frozen=True)
class Fabric:
    params: FabricParams
    plbs: tuple[tuple[int, int], ...]
    switch_boxes: tuple[tuple[int, int], ...]
    segment_groups: tuple[tuple[str, int, int], ...]
    connection_boxes: tuple[tuple[int, int, int], ...]
    nodes: tuple
    switches: tuple[tuple[int, int], ...]
    sb_frames: tuple[tuple[int, int], ...]
    cb_frames: tuple[tuple[int, int], ...]
    node_index: dict = field(compare=False, repr=False)

    @property
    def wire_segments(self) -> tuple[SegNode, ...]:
        return tuple(n for n in self.nodes if isinstance(n, SegNode))

    def pin(self, kind: str, row: int, col: int, index: int) -> int:
        return self.node_index[PinNode(kind, row, col, index)]

    def seg(self, orient: str, chan: int, pos: int, track: int) -> int:
        return self.node_index[SegNode(orient, chan, pos, track)]

    @property
    def n_switches(self) -> int:
        return len(self.switches)


def build_fabric(params: FabricParams) -> Fabric:
    """Enumerate every site, segment, box and switch of the fabric."""
    params.validate()
    rows, cols, width = params.rows, params.cols, params.channel_width
    plbs = tuple((r, c) for r in range(rows) for c in range(cols))
    sboxes = tuple((i, j) for i in range(rows + 1) for j in range(cols + 1))
    groups = tuple(("H", h, c) for h in range(rows + 1) for c in range(cols)) + tuple(
        ("V", v, r) for v in range(cols + 1) for r in range(rows)
    )
    cboxes = tuple((r, c, s) for r, c in plbs for s in range(4))

    nodes: list = []
    for r, c in plbs:
        nodes.extend(PinNode("in", r, c, k) for k in range(params.plb_inputs))
        nodes.extend(PinNode("out", r, c, k) for k in range(params.plb_outputs))
    for g in groups:
        nodes.extend(SegNode(*g, t) for t in range(width))
    index = {n: i for i, n in enumerate(nodes)}

    switches: list[tuple[int, int]] = []
    sb_frames = []
    for i, j in sboxes:
        start = len(switches)
        present = [g for g in (sb_side_group(params, i, j, s) for s in range(4)) if g is not None]
        for ga, gb in combinations(present, 2):
            for t in range(width):
                switches.append((index[SegNode(*ga, t)], index[SegNode(*gb, t)]))
        sb_frames.append((start, len(switches) - start))

    cb_frames = []
    for r, c, s in cboxes:
        start = len(switches)
        g = plb_side_group(r, c, s)
        pins = [PinNode("in", r, c, k) for k in range(s, params.plb_inputs, 4)]
        pins += [PinNode("out", r, c, k) for k in range(s, params.plb_outputs, 4)]
        for p in pins:
            for t in range(width):
                switches.append((index[p], index[SegNode(*g, t)]))
        cb_frames.append((start, len(switches) - start))

    return Fabric(
        params=params,
        plbs=plbs,
        switch_boxes=sboxes,
        segment_groups=groups,
        connection_boxes=cboxes,
        nodes=tuple(nodes),
        switches=tuple(switches),
        sb_frames=tuple(sb_frames),
        cb_frames=tuple(cb_frames),
        node_index=index,
    )


@dataclass(frozen=True)
class RoutingGraph:
    """Directed routing-resource graph; every node has capacity 1."""

    fabric: Fabric
    succ: tuple[tuple[int, ...], ...]
    edge_switch: dict = field(repr=False)

    capacity = 1

    @property
    def n_nodes(self) -> int:
        return len(self.succ)

    @property
    def n_edges(self) -> int:
        return len(self.edge_switch)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edge_switch


def build_routing_graph(fabric: Fabric) -> RoutingGraph:
    succ: list[list[int]] = [[] for _ in fabric.nodes]
    edge_switch: dict[tuple[int, int], int] = {}

    def add(u, v, s):
        succ[u].append(v)
        edge_switch[(u, v)] = s

    for s, (u, v) in enumerate(fabric.switches):
        nu = fabric.nodes[u]
        if isinstance(nu, SegNode):
            add(u, v, s)
            add(v, u, s)
        elif nu.kind == "out":
            add(u, v, s)
        else:
            add(v, u, s)
    return RoutingGraph(fabric, tuple(tuple(x) for x in succ), edge_switch)
