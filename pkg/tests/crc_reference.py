"""Bit-at-a-time CRC-16/ARC reference, independent of the table version.

Follows the formal parameter set literally: poly 0x8005, init 0,
reflect each input byte, process MSB-first, reflect the 16-bit result,
xorout 0.  Deliberately naive; used only as a test oracle.
"""


def reverse_bits(value: int, width: int) -> int:
    out = 0
    for _ in range(width):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


_REVERSED_BYTE = tuple(reverse_bits(b, 8) for b in range(256))


def crc16_arc_bitwise(data: bytes) -> int:
    crc = 0
    for byte in data:
        crc ^= _REVERSED_BYTE[byte] << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x8005) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
    return reverse_bits(crc, 16)
