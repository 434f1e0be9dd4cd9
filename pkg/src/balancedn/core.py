"""Content names, packet types, and the CRC16-mod-N resolver assignment.

The checksum is CRC-16/ARC: width=16, poly=0x8005, init=0, refIn=True,
refOut=True, xorOut=0.  Check value: crc16(b"123456789") == 0xBB3D.
The variant is swappable through the ``checksum`` parameter of
``assign_resolver`` so experiments can plug in alternates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

ResolverIndex = int

SIGNATURE_BITS = 256
_SIGNATURE_PLACEHOLDER = bytes(SIGNATURE_BITS // 8)


def _build_crc_table() -> tuple[int, ...]:
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ 0xA001 if crc & 1 else crc >> 1  # 0x8005 bit-reversed
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc16(data: bytes) -> int:
    """Return the CRC-16/ARC checksum of ``data``."""
    crc = 0
    table = _CRC_TABLE
    for byte in data:
        crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc


def crc16_update(crc: int, byte: int) -> int:
    """Fold one more byte into a running CRC-16/ARC value."""
    return _CRC_TABLE[(crc ^ byte) & 0xFF] ^ (crc >> 8)


class NameFormatError(ValueError):
    """Raised when a name string does not parse."""


@dataclass(frozen=True, slots=True)
class ContentName:
    """Hierarchical content identifier: one or more non-empty segments.

    The canonical text form is the segments joined with ``/`` and a
    leading ``/``, e.g. ``/video/a.mp4``.  Equality and hashing follow
    the segment tuple.
    """

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise NameFormatError("a name needs at least one segment")
        for i, seg in enumerate(self.segments):
            if not seg:
                raise NameFormatError(f"empty segment at position {i + 1}")
            if "/" in seg:
                raise NameFormatError(f"segment {i + 1} contains '/'")

    @property
    def canonical_text(self) -> str:
        return "/" + "/".join(self.segments)

    def encoded(self) -> bytes:
        """Canonical text as the raw bytes fed to the hash (no trailing slash)."""
        return self.canonical_text.encode("utf-8")

    def has_prefix(self, prefix: "ContentName") -> bool:
        """True when ``prefix``'s segments are a leading subsequence of ours."""
        n = len(prefix.segments)
        return n <= len(self.segments) and self.segments[:n] == prefix.segments

    def __str__(self) -> str:
        return self.canonical_text


def parse_name(text: str) -> ContentName:
    """Parse ``/seg1/seg2/...`` into a ContentName.

    Rejects the empty string, a bare ``/``, and empty segments such as
    the one produced by ``//``; the error names the offending position.
    """
    if not text:
        raise NameFormatError("empty name")
    if not text.startswith("/"):
        raise NameFormatError("name must start with '/'")
    if text == "/":
        raise NameFormatError("name needs at least one segment")
    segments = text[1:].split("/")
    for i, seg in enumerate(segments):
        if not seg:
            raise NameFormatError(f"empty segment at position {i + 1}")
    return ContentName(tuple(segments))


def name(text: str) -> ContentName:
    """Shorthand alias for :func:`parse_name`."""
    return parse_name(text)


@dataclass(frozen=True, slots=True)
class InterestPacket:
    """A request for named content.

    ``trace`` lists the node ids visited so far (metrics only, never
    consulted by forwarding).  ``hop_count`` equals ``len(trace) - 1``
    whenever the trace is non-empty.  The nonce never changes after
    creation; each link crossing produces a new stamped copy.
    """

    name: ContentName
    nonce: int
    hop_count: int = 0
    trace: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.hop_count < 0:
            raise ValueError("hop_count must be non-negative")
        if self.trace and self.hop_count != len(self.trace) - 1:
            raise ValueError("hop_count must equal len(trace) - 1")

    def delivered_to(self, node_id: int) -> "InterestPacket":
        """Copy stamped for arrival at ``node_id`` after one link crossing."""
        return replace(self, hop_count=self.hop_count + 1, trace=self.trace + (node_id,))


@dataclass(frozen=True, slots=True)
class DataPacket:
    """Named content flowing back toward requesters.

    The signature is an opaque fixed 256-bit placeholder; payload_size
    is in bits.  ``trace`` mirrors InterestPacket's and exists for
    metrics only.
    """

    name: ContentName
    payload_size: int
    signature: bytes = _SIGNATURE_PLACEHOLDER
    hop_count: int = 0
    trace: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.payload_size <= 0:
            raise ValueError("payload_size must be positive")
        if len(self.signature) != SIGNATURE_BITS // 8:
            raise ValueError("signature placeholder must be 256 bits")

    def delivered_to(self, node_id: int) -> "DataPacket":
        return replace(self, hop_count=self.hop_count + 1, trace=self.trace + (node_id,))


def assign_resolver(name: ContentName, resolver_count: int, *, checksum=crc16) -> ResolverIndex:
    """Map a name to a resolver shard index: checksum(canonical bytes) mod N."""
    if resolver_count < 1:
        raise ValueError("resolver_count must be at least 1")
    return checksum(name.encoded()) % resolver_count
