"""
AI-driven development file
Purpose: Binary frame codec for gateway messages on the flying-to-ground LoRa downlink
Module: UAV_LoRa_SAR_Lab/telemetry.py
Dependencies: world
"""

import binascii
import logging
import math
import struct
from pathlib import Path
from typing import Iterable, List, Tuple, Union

from world import GatewayMessage

logger = logging.getLogger(__name__)

MAGIC = b"LS"
VERSION = 0x01
# magic, version, rssi (centi-dBm), snr (centi-dB), x (mm), y (mm), sequence number
BODY = struct.Struct(">2sBhhiiH")
CRC = struct.Struct(">H")
FRAME_SIZE = BODY.size + CRC.size

_INT16 = (-(1 << 15), (1 << 15) - 1)
_INT32 = (-(1 << 31), (1 << 31) - 1)
_UINT16 = (0, (1 << 16) - 1)


class FrameError(ValueError):
    """A frame failed one of the length, magic, version, crc or range checks."""

    def __init__(self, check: str, message: str) -> None:
        super().__init__(f"{check} check failed: {message}")
        self.check = check


def crc16_ccitt(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: polynomial 0x1021, initial value 0xFFFF."""
    return binascii.crc_hqx(data, 0xFFFF)


def _quantize(name: str, value: float, scale: int, bounds: Tuple[int, int]) -> int:
    if not math.isfinite(value):
        raise FrameError("range", f"{name} is not finite: {value}")
    q = int(round(value * scale))
    if not bounds[0] <= q <= bounds[1]:
        raise FrameError("range", f"{name}={value} does not fit the frame field")
    return q


def encode(msg: GatewayMessage, seq: int) -> bytes:
    """
    Pack a gateway message into one frame.

    Raises:
        FrameError: With check "range" if a field does not fit its width
    """
    if not _UINT16[0] <= seq <= _UINT16[1]:
        raise FrameError("range", f"seq={seq} does not fit 16 bits")
    body = BODY.pack(
        MAGIC,
        VERSION,
        _quantize("rssi_dbm", msg.rssi_dbm, 100, _INT16),
        _quantize("snr_db", msg.snr_db, 100, _INT16),
        _quantize("x_m", msg.x_m, 1000, _INT32),
        _quantize("y_m", msg.y_m, 1000, _INT32),
        seq,
    )
    return body + CRC.pack(crc16_ccitt(body))


def decode(frame: bytes) -> Tuple[GatewayMessage, int]:
    """
    Validate and unpack one frame.

    Checks run in the order length, magic, version, crc.

    Returns:
        (message, sequence number)

    Raises:
        FrameError: Naming the first failing check
    """
    if len(frame) != FRAME_SIZE:
        raise FrameError("length", f"expected {FRAME_SIZE} bytes, got {len(frame)}")
    magic, version, rssi, snr, x_mm, y_mm, seq = BODY.unpack_from(frame)
    if magic != MAGIC:
        raise FrameError("magic", f"expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise FrameError("version", f"unsupported version {version}")
    (crc,) = CRC.unpack_from(frame, BODY.size)
    expected = crc16_ccitt(frame[:BODY.size])
    if crc != expected:
        raise FrameError("crc", f"frame carries 0x{crc:04X}, computed 0x{expected:04X}")
    return GatewayMessage(rssi / 100.0, snr / 100.0, x_mm / 1000.0, y_mm / 1000.0), seq


def write_frames(path: Union[str, Path], messages: Iterable[GatewayMessage]) -> int:
    """Write messages as concatenated frames numbered from 0 (mod 2**16). Returns the frame count."""
    frames = [encode(m, i % (1 << 16)) for i, m in enumerate(messages)]
    Path(path).write_bytes(b"".join(frames))
    logger.info(f"Wrote {len(frames)} frames to {path}")
    return len(frames)


def read_frames(path: Union[str, Path]) -> List[Tuple[GatewayMessage, int]]:
    """
    Decode a .frames file.

    Raises:
        FrameError: If the file is not a whole number of frames or any frame is invalid
    """
    data = Path(path).read_bytes()
    if len(data) % FRAME_SIZE:
        raise FrameError("length", f"{path} holds {len(data)} bytes, not a multiple of {FRAME_SIZE}")
    return [decode(data[i:i + FRAME_SIZE]) for i in range(0, len(data), FRAME_SIZE)]
