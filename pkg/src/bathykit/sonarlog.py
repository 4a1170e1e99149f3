"""Reader/writer for the BSL1 survey log triple.

A survey directory holds::

    survey.dat    64-byte header
    chanK.son     ping records for channel K
    chanK.idx     one 12-byte index entry per ping in chanK.son

Everything is little-endian.

Header (64 bytes)::

    off  size  field
      0     4  magic            b"BSL1"
      4     2  version          u16 = 1
      6     2  channel_count    u16 >= 1
      8     8  epoch_start_ms   u64, Unix milliseconds
     16     1  water_type       u8, 0 fresh / 1 salt
     17     4  sound_speed_mps  f32 in [1400, 1600]
     21    32  device_name      UTF-8, zero padded
     53    11  reserved         zeros

Ping record (37 + sample_count bytes)::

    off  size  field
      0     4  sync             C0 DE AB 21
      4     4  record_len       u32, whole record
      8     4  time_offset_ms   u32, since epoch_start_ms
     12     4  lat_e7           i32, degrees * 1e7
     16     4  lon_e7           i32
     20     2  heading_cdeg     u16 in [0, 35999]
     22     2  speed_cmps       u16
     24     4  depth_cm         u32 <= 45700
     28     2  freq_khz         u16
     30     1  beam_id          u8
     31     2  sample_count     u16
     33     n  samples          u8 echo intensity
   33+n     4  crc32            over bytes [4, 33+n)

Index entry (12 bytes): ``time_offset_ms`` u32, ``byte_offset`` u64.
"""
from __future__ import annotations

import mmap
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

MAGIC = b"BSL1"
VERSION = 1
HEADER_SIZE = 64
SYNC = b"\xc0\xde\xab\x21"
DAT_NAME = "survey.dat"

_HEADER = struct.Struct("<4sHHQBf32s11x")
_FIXED = struct.Struct("<4sIIiiHHIHBH")
_CRC = struct.Struct("<I")
_IDX = struct.Struct("<IQ")

RECORD_OVERHEAD = _FIXED.size + _CRC.size  # 37
INDEX_ENTRY_SIZE = _IDX.size  # 12
MAX_DEPTH_CM = 45700

assert _HEADER.size == HEADER_SIZE and RECORD_OVERHEAD == 37

# beam_id -> (description, allowed frequency in kHz)
BEAMS = {
    0: ("down 200 kHz 20 deg", 200),
    1: ("down 83 kHz 60 deg", 83),
    2: ("down imaging", 455),
    3: ("side port 86 deg", 455),
    4: ("side starboard 86 deg", 455),
}
DOWN_BEAMS = (0, 1)


@dataclass(frozen=True)
class SonarSpec:
    """Fixed capabilities of the side-imaging sounder."""

    frequencies_khz: tuple = (83, 200, 455)
    chirp_2d_khz: tuple = ((75, 95), (175, 225))
    chirp_imaging_khz: tuple = (420, 520)
    down_beam_deg: tuple = ((200, 20.0), (83, 60.0))
    side_beam_deg: float = 86.0
    max_depth_m: float = 457.0
    side_range_m: float = 73.0


SONAR = SonarSpec()


class SonarLogError(Exception):
    """Base class for log format errors."""


class BadMagic(SonarLogError):
    pass


class InvalidRecord(SonarLogError):
    pass


class TruncatedRecord(SonarLogError):
    def __init__(self, path, offset: int, last_good: int):
        self.path = path
        self.offset = offset
        self.last_good = last_good
        super().__init__(
            f"{path}: truncated record at byte {offset} (last good offset {last_good})"
        )


class CrcMismatch(SonarLogError):
    def __init__(self, path, record: int, offset: int):
        self.path = path
        self.record = record
        self.offset = offset
        super().__init__(f"{path}: CRC mismatch in record {record} at byte {offset}")


class NonMonotonicTime(SonarLogError):
    def __init__(self, path, record: int, t_prev: int, t: int):
        self.path = path
        self.record = record
        super().__init__(
            f"{path}: record {record} time {t} ms not after previous {t_prev} ms"
        )


@dataclass(frozen=True)
class SurveyHeader:
    channel_count: int = 1
    epoch_start_ms: int = 0
    water_type: int = 0
    sound_speed_mps: float = 1480.0
    device_name: str = ""
    version: int = VERSION
    magic: bytes = MAGIC

    def validate(self):
        if self.magic != MAGIC:
            raise BadMagic(f"bad magic {self.magic!r}")
        if self.version != VERSION:
            raise InvalidRecord(f"unsupported version {self.version}")
        if not 1 <= self.channel_count <= 0xFFFF:
            raise InvalidRecord(f"channel_count {self.channel_count} out of range")
        if not 0 <= self.epoch_start_ms < 2**64:
            raise InvalidRecord("epoch_start_ms out of range")
        if self.water_type not in (0, 1):
            raise InvalidRecord(f"water_type {self.water_type} not 0 or 1")
        if not 1400.0 <= self.sound_speed_mps <= 1600.0:
            raise InvalidRecord(f"sound speed {self.sound_speed_mps} outside [1400, 1600]")
        if len(self.device_name.encode("utf-8")) > 32:
            raise InvalidRecord("device_name longer than 32 bytes")

    def pack(self) -> bytes:
        self.validate()
        return _HEADER.pack(
            self.magic,
            self.version,
            self.channel_count,
            self.epoch_start_ms,
            self.water_type,
            self.sound_speed_mps,
            self.device_name.encode("utf-8"),
        )

    @classmethod
    def unpack(cls, data: bytes) -> "SurveyHeader":
        if len(data) < HEADER_SIZE:
            raise TruncatedRecord(DAT_NAME, len(data), 0)
        magic, version, nch, epoch, water, speed, name = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
        h = cls(
            channel_count=nch,
            epoch_start_ms=epoch,
            water_type=water,
            sound_speed_mps=speed,
            device_name=name.rstrip(b"\0").decode("utf-8"),
            version=version,
            magic=magic,
        )
        h.validate()
        return h


@dataclass(frozen=True)
class PingRecord:
    time_offset_ms: int
    lat_e7: int
    lon_e7: int
    heading_cdeg: int
    speed_cmps: int
    depth_cm: int
    freq_khz: int = 200
    beam_id: int = 0
    samples: bytes = b""

    @property
    def lat_deg(self) -> float:
        return self.lat_e7 / 1e7

    @property
    def lon_deg(self) -> float:
        return self.lon_e7 / 1e7

    @property
    def depth_m(self) -> float:
        return self.depth_cm / 100.0

    @property
    def record_len(self) -> int:
        return RECORD_OVERHEAD + len(self.samples)

    def validate(self):
        if not 0 <= self.time_offset_ms < 2**32:
            raise InvalidRecord(f"time_offset_ms {self.time_offset_ms} out of u32 range")
        for name in ("lat_e7", "lon_e7"):
            v = getattr(self, name)
            if not -(2**31) <= v < 2**31:
                raise InvalidRecord(f"{name} {v} out of i32 range")
        if not -900_000_000 <= self.lat_e7 <= 900_000_000:
            raise InvalidRecord(f"latitude {self.lat_e7} e-7 deg out of range")
        if not -1_800_000_000 <= self.lon_e7 <= 1_800_000_000:
            raise InvalidRecord(f"longitude {self.lon_e7} e-7 deg out of range")
        if not 0 <= self.heading_cdeg < 36000:
            raise InvalidRecord(f"heading {self.heading_cdeg} cdeg not in [0, 35999]")
        if not 0 <= self.speed_cmps <= 0xFFFF:
            raise InvalidRecord(f"speed {self.speed_cmps} cm/s out of u16 range")
        if not 0 <= self.depth_cm <= MAX_DEPTH_CM:
            raise InvalidRecord(f"depth {self.depth_cm} cm beyond {MAX_DEPTH_CM}")
        if self.beam_id not in BEAMS:
            raise InvalidRecord(f"unknown beam_id {self.beam_id}")
        if BEAMS[self.beam_id][1] != self.freq_khz:
            raise InvalidRecord(
                f"beam {self.beam_id} requires {BEAMS[self.beam_id][1]} kHz, got {self.freq_khz}"
            )
        if len(self.samples) > 0xFFFF:
            raise InvalidRecord("more than 65535 samples")

    def pack(self) -> bytes:
        self.validate()
        n = len(self.samples)
        head = _FIXED.pack(
            SYNC,
            RECORD_OVERHEAD + n,
            self.time_offset_ms,
            self.lat_e7,
            self.lon_e7,
            self.heading_cdeg,
            self.speed_cmps,
            self.depth_cm,
            self.freq_khz,
            self.beam_id,
            n,
        )
        body = head[4:] + bytes(self.samples)
        return SYNC + body + _CRC.pack(zlib.crc32(body))


def _decode_record(rec: bytes) -> PingRecord:
    """Decode a CRC-checked record. Raises InvalidRecord on field violations."""
    (_, length, t, lat, lon, hdg, spd, depth, freq, beam, n) = _FIXED.unpack_from(rec)
    if length != RECORD_OVERHEAD + n:
        raise InvalidRecord(f"record_len {length} disagrees with sample_count {n}")
    p = PingRecord(t, lat, lon, hdg, spd, depth, freq, beam, bytes(rec[_FIXED.size : length - 4]))
    p.validate()
    return p


def _crc_ok(rec) -> bool:
    (crc,) = _CRC.unpack_from(rec, len(rec) - 4)
    return zlib.crc32(rec[4:-4]) == crc


def son_path(directory, channel: int) -> Path:
    return Path(directory) / f"chan{channel}.son"


def idx_path(directory, channel: int) -> Path:
    return Path(directory) / f"chan{channel}.idx"


def encode_channel(pings: Sequence[PingRecord]) -> tuple[bytes, bytes]:
    """Serialise one channel to ``(son_bytes, idx_bytes)``."""
    son = bytearray()
    idx = bytearray()
    prev = None
    for i, p in enumerate(pings):
        if prev is not None and p.time_offset_ms <= prev:
            raise NonMonotonicTime("<memory>", i, prev, p.time_offset_ms)
        prev = p.time_offset_ms
        idx += _IDX.pack(p.time_offset_ms, len(son))
        son += p.pack()
    return bytes(son), bytes(idx)


def write_survey(header: SurveyHeader, channels: Sequence[Sequence[PingRecord]], directory):
    """Write ``survey.dat`` plus one SON/IDX pair per channel.

    ``channels`` must have exactly ``header.channel_count`` entries, each
    ordered by strictly increasing ``time_offset_ms``. All records are
    encoded before anything touches the disk, so an invalid ping leaves
    the directory unchanged.
    """
    if len(channels) != header.channel_count:
        raise InvalidRecord(
            f"header declares {header.channel_count} channels, got {len(channels)}"
        )
    dat = header.pack()
    encoded = [encode_channel(ch) for ch in channels]
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / DAT_NAME).write_bytes(dat)
    for k, (son, idx) in enumerate(encoded):
        son_path(directory, k).write_bytes(son)
        idx_path(directory, k).write_bytes(idx)
    return [directory / DAT_NAME] + [
        p for k in range(len(encoded)) for p in (son_path(directory, k), idx_path(directory, k))
    ]


def read_header(directory) -> SurveyHeader:
    return SurveyHeader.unpack(Path(directory, DAT_NAME).read_bytes())


def iter_pings(path) -> Iterator[PingRecord]:
    """Stream pings from a SON file, validating framing, CRC and time order.

    Holds at most one record in memory.
    """
    path = Path(path)
    prev_t = None
    with open(path, "rb") as fh:
        offset = 0
        record = 0
        while True:
            head = fh.read(8)
            if not head:
                return
            if len(head) < 8:
                raise TruncatedRecord(path, offset, offset)
            if head[:4] != SYNC:
                raise InvalidRecord(f"{path}: missing sync pattern at byte {offset}")
            (length,) = struct.unpack_from("<I", head, 4)
            if length < RECORD_OVERHEAD:
                raise InvalidRecord(f"{path}: record_len {length} too small at byte {offset}")
            rest = fh.read(length - 8)
            if len(rest) < length - 8:
                raise TruncatedRecord(path, offset, offset)
            rec = head + rest
            if not _crc_ok(rec):
                raise CrcMismatch(path, record, offset)
            try:
                ping = _decode_record(rec)
            except InvalidRecord as e:
                raise InvalidRecord(f"{path}: record {record} at byte {offset}: {e}") from None
            if prev_t is not None and ping.time_offset_ms <= prev_t:
                raise NonMonotonicTime(path, record, prev_t, ping.time_offset_ms)
            prev_t = ping.time_offset_ms
            yield ping
            offset += length
            record += 1


def read_survey(directory) -> tuple[SurveyHeader, list[list[PingRecord]]]:
    directory = Path(directory)
    header = read_header(directory)
    channels = [list(iter_pings(son_path(directory, k))) for k in range(header.channel_count)]
    return header, channels


@dataclass(frozen=True)
class IndexEntry:
    time_offset_ms: int
    byte_offset: int


def read_index(path) -> list[IndexEntry]:
    data = Path(path).read_bytes()
    if len(data) % INDEX_ENTRY_SIZE:
        raise TruncatedRecord(path, len(data) - len(data) % INDEX_ENTRY_SIZE,
                              len(data) - len(data) % INDEX_ENTRY_SIZE)
    return [IndexEntry(*e) for e in _IDX.iter_unpack(data)]


def pack_index(entries: Iterable[IndexEntry]) -> bytes:
    return b"".join(_IDX.pack(e.time_offset_ms, e.byte_offset) for e in entries)


def rebuild_index(path) -> list[IndexEntry]:
    """Recover an index by scanning a SON file for valid records.

    Every sync pattern is a candidate; it is accepted when its length
    field fits in the file, the CRC matches and the fields decode. After
    an accepted record the scan resumes at its end, otherwise one byte
    past the candidate. Records whose time does not advance are skipped.
    On an intact file the result equals the writer's index.
    """
    path = Path(path)
    size = os.path.getsize(path)
    if size == 0:
        return []
    entries: list[IndexEntry] = []
    with open(path, "rb") as fh, mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ) as mm:
        pos = mm.find(SYNC, 0)
        while pos != -1:
            nxt = pos + 1
            if pos + RECORD_OVERHEAD <= size:
                (length,) = struct.unpack_from("<I", mm, pos + 4)
                if RECORD_OVERHEAD <= length <= size - pos:
                    rec = mm[pos : pos + length]
                    if _crc_ok(rec):
                        try:
                            ping = _decode_record(rec)
                        except InvalidRecord:
                            ping = None
                        if ping is not None and (
                            not entries or ping.time_offset_ms > entries[-1].time_offset_ms
                        ):
                            entries.append(IndexEntry(ping.time_offset_ms, pos))
                            nxt = pos + length
            pos = mm.find(SYNC, nxt)
    if not entries:
        raise SonarLogError(f"{path}: no valid records found")
    return entries
