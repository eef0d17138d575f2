"""Framed binary protocol between the master and worker nodes.

Frame: magic "RHSG", version byte (1), message-type byte, u32
little-endian payload length, payload. Payloads carry section
assignments (image sub-cube plus merge parameters) and results (merge
log, serialized region graph, pixel assignment). All reals are
little-endian; samples travel as f32, merge dissimilarities and band
sums as f64 so results are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, BadVersion, Truncated, UnknownType
from .graph import MergeKind, MergeRecord, Region, RegionGraph
from .image import HyperImage
from .sections import SectionId

MAGIC = b"RHSG"
VERSION = 1

HELLO, ASSIGN, RESULT, ERROR, SHUTDOWN = 1, 2, 3, 4, 5
_TYPES = {HELLO, ASSIGN, RESULT, ERROR, SHUTDOWN}

_HEADER = struct.Struct("<4sBBI")
HEADER_SIZE = _HEADER.size

STRATEGY_CODES = {"seq": 0, "per-region": 1, "per-pair": 2}
STRATEGY_NAMES = {v: k for k, v in STRATEGY_CODES.items()}

_SECTION = struct.Struct("<BHH")
_ASSIGN_FIXED = struct.Struct("<IIdIBH")
_MERGE_REC = struct.Struct("<IIdB")
_REGION_FIXED = struct.Struct("<II")


def encode_message(msg_type: int, payload: bytes = b"") -> bytes:
    if msg_type not in _TYPES:
        raise UnknownType(f"unknown message type {msg_type}")
    return _HEADER.pack(MAGIC, VERSION, msg_type, len(payload)) + payload


def decode_message(data: bytes) -> tuple[int, bytes]:
    """Decode one frame from a byte string (must contain it entirely)."""
    if len(data) < HEADER_SIZE:
        raise Truncated(f"frame header needs {HEADER_SIZE} bytes, got {len(data)}")
    magic, version, msg_type, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    if msg_type not in _TYPES:
        raise UnknownType(f"unknown message type {msg_type}")
    if len(data) < HEADER_SIZE + length:
        raise Truncated(
            f"payload declares {length} bytes, frame holds {len(data) - HEADER_SIZE}"
        )
    return msg_type, data[HEADER_SIZE : HEADER_SIZE + length]


def read_message(stream) -> tuple[int, bytes]:
    """Read one frame from a binary file-like object (socket makefile)."""
    header = stream.read(HEADER_SIZE)
    if len(header) < HEADER_SIZE:
        raise Truncated("connection closed mid-header")
    magic, version, msg_type, length = _HEADER.unpack(header)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    if msg_type not in _TYPES:
        raise UnknownType(f"unknown message type {msg_type}")
    payload = stream.read(length)
    if len(payload) < length:
        raise Truncated("connection closed mid-payload")
    return msg_type, payload


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Truncated(f"payload ends {self.pos + n - len(self.data)} bytes short")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def done(self):
        if self.pos != len(self.data):
            raise Truncated(f"{len(self.data) - self.pos} trailing bytes in payload")


@dataclass
class AssignPayload:
    section_id: SectionId
    image: HyperImage
    spectral_weight: float
    section_target: int
    strategy: str
    tile_k: int

    def encode(self) -> bytes:
        sid = self.section_id
        samples = np.ascontiguousarray(self.image.samples, dtype="<f4")
        head = _SECTION.pack(sid.level, sid.row, sid.col) + _ASSIGN_FIXED.pack(
            self.image.edge,
            self.image.bands,
            self.spectral_weight,
            self.section_target,
            STRATEGY_CODES[self.strategy],
            self.tile_k,
        )
        return head + samples.tobytes()

    @classmethod
    def decode(cls, payload: bytes) -> "AssignPayload":
        r = _Reader(payload)
        level, row, col = r.unpack(_SECTION)
        edge, bands, weight, target, code, tile_k = r.unpack(_ASSIGN_FIXED)
        if code not in STRATEGY_NAMES:
            raise UnknownType(f"unknown strategy code {code}")
        raw = r.take(edge * edge * bands * 4)
        r.done()
        samples = np.frombuffer(raw, dtype="<f4").reshape(bands, edge, edge)
        return cls(
            section_id=SectionId(level, row, col),
            image=HyperImage(edge, edge, bands, samples.astype(np.float32)),
            spectral_weight=weight,
            section_target=target,
            strategy=STRATEGY_NAMES[code],
            tile_k=tile_k,
        )


@dataclass
class ResultPayload:
    section_id: SectionId
    records: list[MergeRecord]
    graph: RegionGraph

    def encode(self) -> bytes:
        sid = self.section_id
        g = self.graph
        parts = [_SECTION.pack(sid.level, sid.row, sid.col)]
        parts.append(struct.pack("<I", len(self.records)))
        for rec in self.records:
            parts.append(
                _MERGE_REC.pack(rec.survivor_id, rec.absorbed_id, rec.dissimilarity, rec.kind)
            )
        parts.append(struct.pack("<I", len(g.regions)))
        for rid in sorted(g.regions):
            reg = g.regions[rid]
            parts.append(_REGION_FIXED.pack(rid, reg.pixel_count))
            parts.append(np.asarray(reg.band_sums, dtype="<f8").tobytes())
            adj = sorted(reg.adjacency)
            parts.append(struct.pack("<H", len(adj)))
            parts.append(np.array(adj, dtype="<u4").tobytes())
        parts.append(np.asarray(g.pixel_assignment, dtype="<u4").tobytes())
        return b"".join(parts)

    @classmethod
    def decode(cls, payload: bytes, edge: int, bands: int) -> "ResultPayload":
        r = _Reader(payload)
        level, row, col = r.unpack(_SECTION)
        (n_rec,) = r.unpack(struct.Struct("<I"))
        records = []
        for k in range(n_rec):
            surv, absorbed, dissim, kind = r.unpack(_MERGE_REC)
            records.append(MergeRecord(k, surv, absorbed, dissim, MergeKind(kind)))
        (n_regions,) = r.unpack(struct.Struct("<I"))
        graph = RegionGraph(edge, edge, bands)
        for _ in range(n_regions):
            rid, count = r.unpack(_REGION_FIXED)
            sums = np.frombuffer(r.take(bands * 8), dtype="<f8").astype(np.float64)
            (n_adj,) = r.unpack(struct.Struct("<H"))
            adj = np.frombuffer(r.take(n_adj * 4), dtype="<u4")
            graph.regions[rid] = Region(
                id=rid,
                pixel_count=count,
                band_sums=sums,
                adjacency={int(a) for a in adj},
                pixels=[],
            )
        assignment = np.frombuffer(r.take(edge * edge * 4), dtype="<u4").astype(np.int64)
        r.done()
        graph.pixel_assignment = assignment
        graph.merges_done = n_rec
        for p, rid in enumerate(assignment):
            graph.regions[int(rid)].pixels.append(p)
        return cls(SectionId(level, row, col), records, graph)


def encode_error(reason: str) -> bytes:
    return encode_message(ERROR, reason.encode("utf-8", errors="replace"))


def decode_error(payload: bytes) -> str:
    return payload.decode("utf-8", errors="replace")
