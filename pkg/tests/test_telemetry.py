import numpy as np
import pytest
from hypothesis import given, strategies as st

from telemetry import FRAME_SIZE, FrameError, crc16_ccitt, decode, encode, read_frames, write_frames
from world import GatewayMessage

messages = st.builds(
    GatewayMessage,
    st.floats(min_value=-327.0, max_value=327.0),
    st.floats(min_value=-327.0, max_value=327.0),
    st.floats(min_value=-2e6, max_value=2e6),
    st.floats(min_value=-2e6, max_value=2e6),
)


def test_crc_check_value():
    assert crc16_ccitt(b"123456789") == 0x29B1


def test_documented_example_frame():
    frame = encode(GatewayMessage(-100.0, 0.0, 0.0, 0.0), 0)
    assert len(frame) == FRAME_SIZE == 19
    assert frame[:3] == bytes([0x4C, 0x53, 0x01])
    assert frame[3:5] == bytes([0xD8, 0xF0])
    assert frame[5:17] == bytes(12)
    assert int.from_bytes(frame[17:], "big") == crc16_ccitt(frame[:17])
    assert decode(frame) == (GatewayMessage(-100.0, 0.0, 0.0, 0.0), 0)


@given(messages, st.integers(min_value=0, max_value=65535))
def test_round_trip_within_quantization(msg, seq):
    decoded, decoded_seq = decode(encode(msg, seq))
    assert decoded_seq == seq
    assert abs(decoded.rssi_dbm - msg.rssi_dbm) <= 0.005 + 1e-9
    assert abs(decoded.snr_db - msg.snr_db) <= 0.005 + 1e-9
    assert abs(decoded.x_m - msg.x_m) <= 0.0005 + 1e-9
    assert abs(decoded.y_m - msg.y_m) <= 0.0005 + 1e-9


def test_quantized_messages_round_trip_exactly():
    rng = np.random.default_rng(0)
    n = 100_000
    centi = rng.integers(-32768, 32768, size=(n, 2))
    milli = rng.integers(-2**31, 2**31, size=(n, 2))
    seqs = rng.integers(0, 65536, size=n)
    for (r, s), (x, y), seq in zip(centi.tolist(), milli.tolist(), seqs.tolist()):
        msg = GatewayMessage(r / 100.0, s / 100.0, x / 1000.0, y / 1000.0)
        assert decode(encode(msg, seq)) == (msg, seq)


def test_every_single_bit_flip_is_detected():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        msg = GatewayMessage(*rng.uniform([-150, -30, -3000, -3000], [0, 40, 3000, 3000]))
        frame = bytearray(encode(msg, int(rng.integers(0, 65536))))
        bit = int(rng.integers(0, 8 * FRAME_SIZE))
        frame[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(FrameError):
            decode(bytes(frame))


def test_checks_are_named():
    frame = encode(GatewayMessage(-80.0, 10.0, 1.0, 2.0), 7)
    cases = {
        "length": frame[:-1],
        "magic": b"XX" + frame[2:],
        "version": frame[:2] + b"\x02" + frame[3:],
        "crc": frame[:-1] + bytes([frame[-1] ^ 0xFF]),
    }
    for check, bad in cases.items():
        with pytest.raises(FrameError) as info:
            decode(bad)
        assert info.value.check == check


@pytest.mark.parametrize(
    "msg, seq",
    [
        (GatewayMessage(-400.0, 0.0, 0.0, 0.0), 0),
        (GatewayMessage(-80.0, 330.0, 0.0, 0.0), 0),
        (GatewayMessage(-80.0, 0.0, 3e6, 0.0), 0),
        (GatewayMessage(float("nan"), 0.0, 0.0, 0.0), 0),
        (GatewayMessage(-80.0, 0.0, 0.0, 0.0), 70_000),
        (GatewayMessage(-80.0, 0.0, 0.0, 0.0), -1),
    ],
)
def test_out_of_range_fields_are_rejected(msg, seq):
    with pytest.raises(FrameError) as info:
        encode(msg, seq)
    assert info.value.check == "range"


def test_frames_file_round_trip(tmp_path):
    msgs = [GatewayMessage(-90.0 - i, 5.0 + i, 40.0 * i, -40.0 * i) for i in range(5)]
    path = tmp_path / "run.frames"
    assert write_frames(path, msgs) == 5
    assert path.stat().st_size == 5 * FRAME_SIZE
    assert read_frames(path) == [(m, i) for i, m in enumerate(msgs)]


def test_truncated_frames_file_is_rejected(tmp_path):
    path = tmp_path / "cut.frames"
    write_frames(path, [GatewayMessage(-90.0, 5.0, 0.0, 0.0)] * 2)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FrameError) as info:
        read_frames(path)
    assert info.value.check == "length"
