"""Bit-exact ``.afpg`` configuration images.

Layout (all multi-byte header fields little-endian)::

    offset  size  field
    0       4     magic  b"AFPG"
    4       1     format version (1)
    5       2     rows
    7       2     cols
    9       2     channel width W
    11      2     PLB input pins
    13      2     PLB output pins
    15      ...   PLB frames, row-major
                  switch-box frames, row-major over (rows+1) x (cols+1)
                  connection-box frames, PLB row-major, sides N, E, S, W

A PLB frame is ``lut7_A(128) | lut2_A(4) | lut7_B(128) | lut2_B(4) | pde(4) |
im(n_sinks * sel_width)`` zero-padded to a whole number of bytes (48 bytes for
the default 12/8 pin PLB).  Switch-box and connection-box frames hold the
enable bits of their switches in canonical order (see ``archmodel``), each
padded to a byte.  Bits are packed LSB first: bit ``p`` of a frame lives in
byte ``p // 8`` at position ``p % 8``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .archmodel import Fabric, FabricParams, build_fabric
from .errors import AfpgaError, BitstreamError
from .plb import ImConfig, ImLayout, LeConfig, Lut2Table, Lut7Table, PdeConfig, PlbConfig

MAGIC = b"AFPG"
VERSION = 1
HEADER = struct.Struct("<4sBHHHHH")


def _ceil8(n: int) -> int:
    return (n + 7) // 8


def plb_frame_bits(params: FabricParams) -> int:
    layout = ImLayout(params.plb_inputs, params.plb_outputs)
    return 2 * (128 + 4) + 4 + layout.n_sinks * layout.select_width


def plb_frame_bytes(params: FabricParams) -> int:
    return _ceil8(plb_frame_bits(params))


def route_bit_count(params: FabricParams) -> int:
    """Number of routing switches for ``params`` (closed form)."""
    r, c, w = params.rows, params.cols, params.channel_width
    sb_pairs = 4 * 1 + (2 * (r - 1) + 2 * (c - 1)) * 3 + (r - 1) * (c - 1) * 6
    return sb_pairs * w + r * c * (params.plb_inputs + params.plb_outputs) * w


def image_length(params: FabricParams) -> int:
    """Size in bytes of an image for ``params`` (closed form)."""
    r, c, w = params.rows, params.cols, params.channel_width
    per_side = (params.plb_inputs + params.plb_outputs) // 4
    sb = 4 * _ceil8(w) + (2 * (r - 1) + 2 * (c - 1)) * _ceil8(3 * w) + (r - 1) * (c - 1) * _ceil8(6 * w)
    cb = 4 * r * c * _ceil8(per_side * w)
    return HEADER.size + r * c * plb_frame_bytes(params) + sb + cb


@lru_cache(maxsize=32)
def _fabric(params: FabricParams) -> Fabric:
    return build_fabric(params)


@dataclass(frozen=True, eq=False)
class FabricConfig:
    params: FabricParams
    plb_configs: tuple[tuple[PlbConfig, ...], ...]
    route_bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.route_bits, dtype=bool)
        bits.setflags(write=False)
        object.__setattr__(self, "route_bits", bits)

    @classmethod
    def default(cls, params: FabricParams) -> "FabricConfig":
        blank = PlbConfig.default(params.plb_inputs, params.plb_outputs)
        plbs = tuple(tuple(blank for _ in range(params.cols)) for _ in range(params.rows))
        return cls(params, plbs, np.zeros(route_bit_count(params), dtype=bool))

    def plb(self, row: int, col: int) -> PlbConfig:
        return self.plb_configs[row][col]

    def validate(self) -> None:
        p = self.params
        try:
            p.validate()
        except AfpgaError as exc:
            raise BitstreamError(str(exc), kind="invalid-config") from exc
        if len(self.plb_configs) != p.rows or any(len(row) != p.cols for row in self.plb_configs):
            raise BitstreamError("plb_configs shape does not match params", kind="invalid-config")
        if self.route_bits.shape != (route_bit_count(p),):
            raise BitstreamError(
                f"route_bits has {self.route_bits.size} bits, expected {route_bit_count(p)}",
                kind="invalid-config",
            )
        layout = ImLayout(p.plb_inputs, p.plb_outputs)
        for row in self.plb_configs:
            for cfg in row:
                if cfg.im.layout != layout:
                    raise BitstreamError("IM layout does not match pin counts", kind="invalid-config")
                if any(not 0 <= s < layout.n_sources for s in cfg.im.selection):
                    raise BitstreamError("IM selector out of range", kind="invalid-config")

    def __eq__(self, other):
        if not isinstance(other, FabricConfig):
            return NotImplemented
        return (
            self.params == other.params
            and self.plb_configs == other.plb_configs
            and np.array_equal(self.route_bits, other.route_bits)
        )

    __hash__ = None


def _pack_plb(cfg: PlbConfig, nbytes: int) -> bytes:
    word = 0
    pos = 0

    def put(value: int, width: int):
        nonlocal word, pos
        word |= value << pos
        pos += width

    for le in cfg.les:
        put(le.lut7.bits, 128)
        put(le.lut2.bits, 4)
    put(cfg.pde.k, 4)
    width = cfg.im.layout.select_width
    for sel in cfg.im.selection:
        put(sel, width)
    return word.to_bytes(nbytes, "little")


def _unpack_plb(frame: bytes, layout: ImLayout) -> PlbConfig:
    word = int.from_bytes(frame, "little")
    pos = 0

    def take(width: int) -> int:
        nonlocal pos
        value = (word >> pos) & ((1 << width) - 1)
        pos += width
        return value

    les = []
    for _ in range(2):
        lut7 = take(128)
        les.append(LeConfig(Lut7Table(lut7), Lut2Table(take(4))))
    pde = PdeConfig(take(4))
    sel = []
    for _ in range(layout.n_sinks):
        s = take(layout.select_width)
        if s >= layout.n_sources:
            raise BitstreamError(f"IM selector {s} out of range", kind="invalid-config")
        sel.append(s)
    if word >> pos:
        raise BitstreamError("nonzero padding in PLB frame", kind="invalid-config")
    return PlbConfig(les[0], les[1], pde, ImConfig(tuple(sel), layout))


def _route_frames(fabric: Fabric):
    return list(fabric.sb_frames) + list(fabric.cb_frames)


def encode(cfg: FabricConfig) -> bytes:
    cfg.validate()
    p = cfg.params
    fabric = _fabric(p)
    out = bytearray(HEADER.pack(MAGIC, VERSION, p.rows, p.cols, p.channel_width, p.plb_inputs, p.plb_outputs))
    nbytes = plb_frame_bytes(p)
    for row in cfg.plb_configs:
        for plb in row:
            out += _pack_plb(plb, nbytes)
    for start, count in _route_frames(fabric):
        out += np.packbits(cfg.route_bits[start : start + count], bitorder="little").tobytes()
    return bytes(out)


def decode(image: bytes) -> FabricConfig:
    image = bytes(image)
    if len(image) < HEADER.size:
        if not MAGIC.startswith(image[:4]):
            raise BitstreamError("bad magic", kind="bad-magic")
        raise BitstreamError("image shorter than header", kind="truncated-image")
    magic, version, rows, cols, width, n_in, n_out = HEADER.unpack_from(image)
    if magic != MAGIC:
        raise BitstreamError(f"bad magic {magic!r}", kind="bad-magic")
    if version != VERSION:
        raise BitstreamError(f"unsupported version {version}", kind="bad-version")
    params = FabricParams(rows, cols, width, n_in, n_out)
    try:
        params.validate()
    except AfpgaError as exc:
        raise BitstreamError(f"bad header: {exc}", kind="invalid-config") from exc
    expected = image_length(params)
    if len(image) < expected:
        raise BitstreamError(f"image is {len(image)} bytes, expected {expected}", kind="truncated-image")
    if len(image) > expected:
        raise BitstreamError(f"{len(image) - expected} bytes after image", kind="trailing-garbage")

    layout = ImLayout(n_in, n_out)
    nbytes = plb_frame_bytes(params)
    pos = HEADER.size
    plbs = []
    for _ in range(rows):
        row = []
        for _ in range(cols):
            row.append(_unpack_plb(image[pos : pos + nbytes], layout))
            pos += nbytes
        plbs.append(tuple(row))

    fabric = _fabric(params)
    bits = np.zeros(len(fabric.switches), dtype=bool)
    for start, count in _route_frames(fabric):
        nb = _ceil8(count)
        unpacked = np.unpackbits(np.frombuffer(image, np.uint8, nb, pos), bitorder="little")
        if unpacked[count:].any():
            raise BitstreamError("nonzero padding in routing frame", kind="invalid-config")
        bits[start : start + count] = unpacked[:count]
        pos += nb
    return FabricConfig(params, tuple(plbs), bits)
