"""Reading and writing of measurement frames (ULF1) and defect maps (CSV).

ULF1 container layout, little-endian throughout:

    bytes 0..3   magic "ULF1"
    bytes 4..7   u32 width   (camera px)
    bytes 8..11  u32 height  (camera px)
    byte  12     u8 channel count: 1 = luminance, 3 = luminance + CIE x + CIE y
    payload      planar row-major float32: luminance[, chroma_x, chroma_y]

The defect map is a CSV whose first line is ``rows,cols`` followed by one
``row,col`` line per defective cell.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FrameFormatError, ValidationError

MAGIC = b"ULF1"
_HEADER = struct.Struct("<4sIIB")


@dataclass(frozen=True)
class MeasurementFrame:
    """A calibrated camera frame: luminance in cd/m^2, optional CIE 1931 x/y planes.

    Planes are float32 arrays of shape (height, width); the container format is
    float32, so keeping that dtype in memory makes round-trips bit-exact.
    """

    width: int
    height: int
    luminance: np.ndarray
    chroma_x: np.ndarray | None = None
    chroma_y: np.ndarray | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        lum = _as_plane(self.luminance, self.height, self.width, "luminance")
        object.__setattr__(self, "luminance", lum)
        bad = ~np.isfinite(lum) | (lum < 0)
        if bad.any():
            idx = int(np.argmax(bad))
            raise ValidationError(
                f"luminance sample at flat index {idx} is {lum.flat[idx]!r}; must be finite and >= 0"
            )
        if (self.chroma_x is None) != (self.chroma_y is None):
            raise ValidationError("chroma planes must be both present or both absent")
        if self.chroma_x is not None:
            for name in ("chroma_x", "chroma_y"):
                plane = _as_plane(getattr(self, name), self.height, self.width, name)
                object.__setattr__(self, name, plane)
                bad = ~np.isfinite(plane) | (plane < 0) | (plane > 1)
                if bad.any():
                    idx = int(np.argmax(bad))
                    raise ValidationError(
                        f"{name} sample at flat index {idx} is {plane.flat[idx]!r}; must lie in [0, 1]"
                    )

    @property
    def has_chroma(self) -> bool:
        return self.chroma_x is not None

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeasurementFrame):
            return NotImplemented
        if (self.width, self.height, self.has_chroma) != (other.width, other.height, other.has_chroma):
            return False
        if not np.array_equal(self.luminance, other.luminance):
            return False
        if self.has_chroma:
            return np.array_equal(self.chroma_x, other.chroma_x) and np.array_equal(
                self.chroma_y, other.chroma_y
            )
        return True


def _as_plane(values, height: int, width: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float32)
    if arr.size != width * height:
        raise ValidationError(
            f"{name} has {arr.size} samples, expected {width}x{height} = {width * height}"
        )
    arr = arr.reshape(height, width)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DefectMap:
    """Immutable ground-truth defect mask over the uLED grid."""

    rows: int
    cols: int
    defective: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ValidationError(f"grid dimensions must be positive, got {self.rows}x{self.cols}")
        mask = np.asarray(self.defective, dtype=bool)
        if mask.size != self.rows * self.cols:
            raise ValidationError(
                f"defect mask has {mask.size} entries, expected {self.rows * self.cols}"
            )
        mask = mask.reshape(self.rows, self.cols)
        mask.setflags(write=False)
        object.__setattr__(self, "defective", mask)

    @classmethod
    def from_cells(cls, rows: int, cols: int, cells) -> "DefectMap":
        mask = np.zeros((rows, cols), dtype=bool)
        for r, c in cells:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValidationError(f"defect cell ({r},{c}) outside {rows}x{cols} grid")
            mask[r, c] = True
        return cls(rows, cols, mask)

    def defect_count(self) -> int:
        return int(self.defective.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, DefectMap):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.defective, other.defective)
        )


def write_frame(frame: MeasurementFrame, path) -> None:
    channels = 3 if frame.has_chroma else 1
    blob = bytearray(_HEADER.pack(MAGIC, frame.width, frame.height, channels))
    blob += frame.luminance.astype("<f4").tobytes()
    if frame.has_chroma:
        blob += frame.chroma_x.astype("<f4").tobytes()
        blob += frame.chroma_y.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(blob))


def read_frame(path) -> MeasurementFrame:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FrameFormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, width, height, channels = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FrameFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if channels not in (1, 3):
        raise FrameFormatError(f"{path}: channel count {channels} not in (1, 3)")
    if width == 0 or height == 0:
        raise FrameFormatError(f"{path}: zero frame dimension {width}x{height}")
    expected = _HEADER.size + 4 * width * height * channels
    if len(data) != expected:
        raise FrameFormatError(
            f"{path}: payload is {len(data) - _HEADER.size} bytes, "
            f"expected {expected - _HEADER.size} for {width}x{height}x{channels}"
        )
    plane_len = width * height
    planes = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    lum = planes[:plane_len]
    if channels == 3:
        cx = planes[plane_len : 2 * plane_len]
        cy = planes[2 * plane_len :]
        return MeasurementFrame(width, height, lum, cx, cy)
    return MeasurementFrame(width, height, lum)


def write_defect_map(defects: DefectMap, path) -> None:
    lines = [f"{defects.rows},{defects.cols}"]
    rows, cols = np.nonzero(defects.defective)
    lines.extend(f"{r},{c}" for r, c in zip(rows.tolist(), cols.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_defect_map(path) -> DefectMap:
    text = Path(path).read_text(encoding="ascii")
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise FrameFormatError(f"{path}: empty defect map")
    try:
        rows, cols = (int(part) for part in lines[0].split(","))
    except ValueError as exc:
        raise FrameFormatError(f"{path}: bad header line {lines[0]!r}") from exc
    cells = []
    for line in lines[1:]:
        try:
            r, c = (int(part) for part in line.split(","))
        except ValueError as exc:
            raise FrameFormatError(f"{path}: bad cell line {line!r}") from exc
        cells.append((r, c))
    return DefectMap.from_cells(rows, cols, cells)
