"""Frame layer: 1-px column partitions sliced into fixed 100-byte frames.

Wire layout (big-endian, 10-byte header + 90-byte payload = 100 bytes):

    offset  field             type
    0       page_id           u16
    2       column_index      u16
    4       chunk_index       u8
    5       chunks_in_column  u8
    6       total_columns     u16
    8       payload_len       u8
    9       flags             u8   bit0 = whole-file mode, bit1 = end marker

Column mode carries raw RGB565 column bytes (big-endian u16 per pixel,
top to bottom), so a lost frame damages exactly one column.  Whole-file
mode carries the page's compressed bitstream split sequentially, one chunk
per "column" slot.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import raster
from .raster import RasterPage

FRAME_SIZE = 100
HEADER_SIZE = 10
PAYLOAD_CAPACITY = FRAME_SIZE - HEADER_SIZE

FLAG_WHOLE_FILE = 0x01
FLAG_END_MARKER = 0x02

MAX_COLUMNS = 0xFFFF
MAX_CHUNKS = 0xFF

_HDR = struct.Struct(">HHBBHBB")

MODE_COLUMN = "column"
MODE_WHOLE_FILE = "whole_file"


class FramingError(ValueError):
    pass


@dataclass(frozen=True)
class FrameHeader:
    page_id: int
    column_index: int
    chunk_index: int
    chunks_in_column: int
    total_columns: int
    payload_len: int
    flags: int = 0

    @property
    def whole_file(self) -> bool:
        return bool(self.flags & FLAG_WHOLE_FILE)

    @property
    def end_marker(self) -> bool:
        return bool(self.flags & FLAG_END_MARKER)


@dataclass(frozen=True)
class Frame:
    header: FrameHeader
    payload: bytes

    def to_bytes(self) -> bytes:
        h = self.header
        raw = _HDR.pack(h.page_id, h.column_index, h.chunk_index, h.chunks_in_column,
                        h.total_columns, h.payload_len, h.flags)
        return raw + self.payload.ljust(PAYLOAD_CAPACITY, b"\0")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Frame":
        if len(data) != FRAME_SIZE:
            raise FramingError(f"frame must be {FRAME_SIZE} bytes, got {len(data)}")
        pid, col, chunk, nchunks, ncols, plen, flags = _HDR.unpack(data[:HEADER_SIZE])
        if plen > PAYLOAD_CAPACITY:
            raise FramingError(f"payload length {plen} exceeds capacity")
        hdr = FrameHeader(pid, col, chunk, nchunks, ncols, plen, flags)
        return cls(hdr, data[HEADER_SIZE:HEADER_SIZE + plen])


def column_bytes(page: RasterPage, col: int) -> bytes:
    return page.pixels[:, col].astype(">u2").tobytes()


def chunks_per_column(height_px: int) -> int:
    return max(1, math.ceil(2 * height_px / PAYLOAD_CAPACITY))


def end_marker(page_id: int, total_columns: int, mode: str = MODE_COLUMN) -> Frame:
    flags = FLAG_END_MARKER | (FLAG_WHOLE_FILE if mode == MODE_WHOLE_FILE else 0)
    hdr = FrameHeader(page_id, 0, 0, 1, total_columns, 0, flags)
    return Frame(hdr, b"")


def partition(page: RasterPage, mode: str = MODE_COLUMN) -> list[Frame]:
    """Split a page into frames; excludes control (end-marker) frames."""
    if mode == MODE_COLUMN:
        ncols = page.width_px
        nchunks = chunks_per_column(page.height_px)
        if ncols > MAX_COLUMNS:
            raise FramingError(f"{ncols} columns exceed addressing limit {MAX_COLUMNS}")
        if nchunks > MAX_CHUNKS:
            raise FramingError(f"{nchunks} chunks per column exceed limit {MAX_CHUNKS}")
        frames = []
        for col in range(ncols):
            data = column_bytes(page, col)
            for ci in range(nchunks):
                chunk = data[ci * PAYLOAD_CAPACITY:(ci + 1) * PAYLOAD_CAPACITY]
                hdr = FrameHeader(page.page_id, col, ci, nchunks, ncols, len(chunk), 0)
                frames.append(Frame(hdr, chunk))
        return frames

    if mode == MODE_WHOLE_FILE:
        stream = raster.page_webp_bytes(page)
        return partition_bitstream(stream, page.page_id)

    raise FramingError(f"unknown mode {mode!r}")


def partition_bitstream(stream: bytes, page_id: int) -> list[Frame]:
    nframes = math.ceil(len(stream) / PAYLOAD_CAPACITY)
    if nframes > MAX_COLUMNS:
        raise FramingError(f"bitstream needs {nframes} frames, limit {MAX_COLUMNS}")
    frames = []
    for i in range(nframes):
        chunk = stream[i * PAYLOAD_CAPACITY:(i + 1) * PAYLOAD_CAPACITY]
        hdr = FrameHeader(page_id, i, 0, 1, nframes, len(chunk), FLAG_WHOLE_FILE)
        frames.append(Frame(hdr, chunk))
    return frames


@dataclass
class ReassemblyState:
    """Single-writer receive state; self-describing from the first frame."""

    page_id: int | None = None
    total_columns: int = 0
    chunks_in_column: int = 0
    whole_file: bool = False
    received: np.ndarray | None = None   # bool (cols, chunks)
    buffers: np.ndarray | None = None    # uint8 (cols, chunks * capacity)
    lengths: np.ndarray | None = None    # uint8 payload length per (col, chunk)
    dropped: int = 0
    accepted: int = 0
    duplicates: int = 0
    end_marker_seen: bool = False
    _closed: bool = field(default=False, repr=False)

    def _init_from(self, hdr: FrameHeader) -> None:
        self.page_id = hdr.page_id
        self.total_columns = hdr.total_columns
        self.chunks_in_column = hdr.chunks_in_column
        self.whole_file = hdr.whole_file
        shape = (hdr.total_columns, hdr.chunks_in_column)
        self.received = np.zeros(shape, dtype=bool)
        self.buffers = np.zeros((shape[0], shape[1] * PAYLOAD_CAPACITY), dtype=np.uint8)
        self.lengths = np.zeros(shape, dtype=np.uint8)

    @property
    def total_frames(self) -> int:
        return self.total_columns * self.chunks_in_column

    @property
    def received_frames(self) -> int:
        return self.accepted

    def missing_columns(self) -> list[int]:
        if self.received is None:
            return []
        return [int(c) for c in np.flatnonzero(~self.received.all(axis=1))]

    def ingest_frame(self, frame: Frame) -> bool:
        """Record one frame; returns True if accepted (duplicates count too)."""
        hdr = frame.header
        if hdr.end_marker:
            if self.page_id is None or hdr.page_id == self.page_id:
                self.end_marker_seen = True
            return False
        if self.page_id is None:
            self._init_from(hdr)
        if (hdr.page_id != self.page_id
                or hdr.total_columns != self.total_columns
                or hdr.chunks_in_column != self.chunks_in_column
                or hdr.column_index >= self.total_columns
                or hdr.chunk_index >= self.chunks_in_column
                or len(frame.payload) != hdr.payload_len):
            self.dropped += 1
            return False
        c, k = hdr.column_index, hdr.chunk_index
        if self.received[c, k]:
            self.duplicates += 1
            return True
        self.received[c, k] = True
        self.lengths[c, k] = hdr.payload_len
        off = k * PAYLOAD_CAPACITY
        self.buffers[c, off:off + hdr.payload_len] = np.frombuffer(frame.payload, np.uint8)
        self.accepted += 1
        return True

    def is_complete(self) -> bool:
        return self.received is not None and bool(self.received.all())


@dataclass
class FinalizeResult:
    page: RasterPage
    missing_columns: list[int]
    frame_loss_rate: float
    total_frames: int
    received_frames: int
    dropped_frames: int
    bitstream: bytes | None = None  # whole-file mode only


def _infer_height(state: ReassemblyState) -> int:
    last = state.chunks_in_column - 1
    got_last = np.flatnonzero(state.received[:, last])
    if got_last.size:
        last_len = int(state.lengths[got_last[0], last])
    else:
        last_len = PAYLOAD_CAPACITY  # no tail chunk seen anywhere: assume full
    total = PAYLOAD_CAPACITY * last + last_len
    return total // 2


def finalize(state: ReassemblyState, *, quality: int = raster.DEFAULT_QUALITY,
             url: str = "") -> FinalizeResult:
    """Assemble received columns into a page; missing columns are zeroed.

    Column completeness is all-or-nothing: a column missing any chunk is
    reported missing and left to the recovery layer.
    """
    if state.page_id is None or state.accepted == 0:
        raise FramingError("no frames received")

    loss_rate = 1.0 - state.accepted / state.total_frames
    missing = state.missing_columns()

    if state.whole_file:
        if missing:
            raise FramingError(f"whole-file mode with {len(missing)} chunks missing")
        parts = []
        for c in range(state.total_columns):
            n = int(state.lengths[c, 0])
            parts.append(state.buffers[c, :n].tobytes())
        stream = b"".join(parts)
        rgb = raster.decode_webp(stream)
        page = RasterPage(page_id=state.page_id, url=url,
                          pixels=raster.rgb888_to_rgb565(rgb), quality_q=quality,
                          crop_limit_ph=None, compressed_size_bytes=len(stream))
        return FinalizeResult(page, [], loss_rate, state.total_frames,
                              state.accepted, state.dropped, bitstream=stream)

    height = _infer_height(state)
    ncols = state.total_columns
    pixels = np.zeros((height, ncols), dtype=np.uint16)
    complete = state.received.all(axis=1)
    if complete.any():
        cols = np.flatnonzero(complete)
        raw = state.buffers[cols, :2 * height]
        vals = (raw[:, 0::2].astype(np.uint16) << 8) | raw[:, 1::2]
        pixels[:, cols] = vals.T
    page = RasterPage(page_id=state.page_id, url=url, pixels=pixels, quality_q=quality,
                      crop_limit_ph=None, compressed_size_bytes=0)
    return FinalizeResult(page, missing, loss_rate, state.total_frames,
                          state.accepted, state.dropped)
