import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uled_inspect import io
from uled_inspect.errors import FrameFormatError, ValidationError

from conftest import make_frame


def test_round_trip_identity(tmp_path):
    frame = make_frame([[0.0, 1.5], [2.25, 3.125], [4.0, 5.5]])
    path = tmp_path / "frame.ulf"
    io.write_frame(frame, path)
    assert io.read_frame(path) == frame


def test_round_trip_with_chroma(tmp_path):
    lum = np.arange(6, dtype=np.float32).reshape(2, 3)
    cx = np.full((2, 3), 0.31, dtype=np.float32)
    cy = np.full((2, 3), 0.32, dtype=np.float32)
    frame = io.MeasurementFrame(3, 2, lum, cx, cy)
    path = tmp_path / "frame.ulf"
    io.write_frame(frame, path)
    back = io.read_frame(path)
    assert back == frame
    assert back.has_chroma


def test_degenerate_1x1_frame(tmp_path):
    frame = io.MeasurementFrame(1, 1, np.array([[0.0]], dtype=np.float32))
    path = tmp_path / "one.ulf"
    io.write_frame(frame, path)
    assert io.read_frame(path) == frame


def test_negative_luminance_names_first_index():
    with pytest.raises(ValidationError, match="index 0"):
        make_frame([[-1.0, 2.0]])


def test_nan_luminance_rejected():
    with pytest.raises(ValidationError, match="index 3"):
        make_frame([[1.0, 2.0], [3.0, float("nan")]])


def test_header_layout_single_channel(tmp_path):
    frame = make_frame(np.zeros((4, 4)))
    path = tmp_path / "f.ulf"
    io.write_frame(frame, path)
    blob = path.read_bytes()
    # 4 magic + 4 width + 4 height + 1 channels + 64 payload
    assert len(blob) == 13 + 64
    assert blob[:4] == b"ULF1"
    assert blob[12] == 1


def test_channel_byte_with_chroma(tmp_path):
    lum = np.zeros((2, 2), dtype=np.float32)
    chroma = np.zeros((2, 2), dtype=np.float32)
    frame = io.MeasurementFrame(2, 2, lum, chroma, chroma)
    path = tmp_path / "f.ulf"
    io.write_frame(frame, path)
    assert path.read_bytes()[12] == 3


def test_write_is_deterministic(tmp_path):
    frame = make_frame([[1.0, 2.0], [3.0, 4.0]])
    a, b = tmp_path / "a.ulf", tmp_path / "b.ulf"
    io.write_frame(frame, a)
    io.write_frame(frame, b)
    assert a.read_bytes() == b.read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ulf"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(FrameFormatError, match="magic"):
        io.read_frame(path)


def test_truncated_payload(tmp_path):
    frame = make_frame(np.ones((4, 4)))
    path = tmp_path / "f.ulf"
    io.write_frame(frame, path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FrameFormatError, match="payload"):
        io.read_frame(path)


def test_trailing_bytes_rejected(tmp_path):
    frame = make_frame(np.ones((2, 2)))
    path = tmp_path / "f.ulf"
    io.write_frame(frame, path)
    path.write_bytes(path.read_bytes() + b"\x00\x00")
    with pytest.raises(FrameFormatError):
        io.read_frame(path)


def test_negative_payload_sample_rejected_on_read(tmp_path):
    frame = make_frame(np.ones((2, 2)))
    path = tmp_path / "f.ulf"
    io.write_frame(frame, path)
    blob = bytearray(path.read_bytes())
    blob[13:17] = np.float32(-1.0).tobytes()
    path.write_bytes(bytes(blob))
    with pytest.raises(ValidationError, match="index 0"):
        io.read_frame(path)


def test_chroma_out_of_range_rejected():
    lum = np.zeros((1, 2), dtype=np.float32)
    with pytest.raises(ValidationError, match="chroma_x"):
        io.MeasurementFrame(2, 1, lum, np.array([[0.5, 1.5]]), np.array([[0.5, 0.5]]))


def test_chroma_planes_all_or_nothing():
    lum = np.zeros((1, 1), dtype=np.float32)
    with pytest.raises(ValidationError, match="both"):
        io.MeasurementFrame(1, 1, lum, np.array([[0.5]]), None)


@settings(max_examples=40, deadline=None)
@given(
    width=st.integers(1, 6),
    height=st.integers(1, 6),
    with_chroma=st.booleans(),
    data=st.data(),
)
def test_round_trip_property(tmp_path_factory, width, height, with_chroma, data):
    n = width * height
    lum = data.draw(
        st.lists(st.floats(0, 1e6, allow_nan=False, width=32), min_size=n, max_size=n)
    )
    chroma = None
    if with_chroma:
        chroma = data.draw(
            st.lists(st.floats(0, 1, allow_nan=False, width=32), min_size=n, max_size=n)
        )
    frame = io.MeasurementFrame(
        width,
        height,
        np.array(lum, dtype=np.float32).reshape(height, width),
        None if chroma is None else np.array(chroma, dtype=np.float32).reshape(height, width),
        None if chroma is None else np.array(chroma, dtype=np.float32).reshape(height, width),
    )
    path = tmp_path_factory.mktemp("rt") / "frame.ulf"
    io.write_frame(frame, path)
    assert io.read_frame(path) == frame


def test_defect_map_empty(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("60,60\n")
    defects = io.read_defect_map(path)
    assert defects.rows == 60 and defects.cols == 60
    assert defects.defect_count() == 0


def test_defect_map_two_cells(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("60,60\n0,0\n59,59\n")
    defects = io.read_defect_map(path)
    assert defects.defect_count() == 2
    assert defects.defective[0, 0] and defects.defective[59, 59]
    assert not defects.defective[1, 1]


def test_defect_map_out_of_range(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("60,60\n60,0\n")
    with pytest.raises(ValidationError, match=r"\(60,0\)"):
        io.read_defect_map(path)


def test_defect_map_round_trip(tmp_path):
    defects = io.DefectMap.from_cells(5, 7, [(0, 1), (4, 6), (2, 3)])
    path = tmp_path / "d.csv"
    io.write_defect_map(defects, path)
    assert io.read_defect_map(path) == defects
    # row-major ordering makes the file deterministic
    assert path.read_text() == "5,7\n0,1\n2,3\n4,6\n"
