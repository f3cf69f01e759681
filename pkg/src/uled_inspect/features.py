"""Per-cell descriptors: luminance statistics plus mean chromaticity.

Each interior cell contributes six values (mean/max/min/std of luminance and
mean CIE x/y), computed over the camera samples whose centers fall inside the
cell rectangle shrunk by a 1 px margin on every side.  The margin keeps
border samples, which mix cell and gap light, out of the statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FeatureExtractionError, ValidationError
from .grid import PixelGrid
from .io import MeasurementFrame

MARGIN_PX = 1.0
NEUTRAL_CHROMA = 0.5

CSV_HEADER = "row,col,mean_l,max_l,min_l,std_l,mean_cx,mean_cy"


@dataclass(frozen=True)
class CellFeatures:
    row: int
    col: int
    mean_l: float
    max_l: float
    min_l: float
    std_l: float
    mean_cx: float
    mean_cy: float

    def __post_init__(self):
        scale = max(abs(self.max_l), 1.0)
        tol = 1e-9 * scale
        if not (self.min_l - tol <= self.mean_l <= self.max_l + tol):
            raise ValidationError(
                f"cell ({self.row},{self.col}): mean {self.mean_l} outside [min, max]"
            )
        if self.std_l < -tol:
            raise ValidationError(f"cell ({self.row},{self.col}): negative std {self.std_l}")
        # Popoviciu: population std can never exceed half the value range.
        if self.std_l > (self.max_l - self.min_l) / 2.0 + tol:
            raise ValidationError(
                f"cell ({self.row},{self.col}): std {self.std_l} exceeds range bound"
            )
        for name in ("mean_cx", "mean_cy"):
            value = getattr(self, name)
            if not -1e-9 <= value <= 1.0 + 1e-9:
                raise ValidationError(f"cell ({self.row},{self.col}): {name}={value} outside [0, 1]")

    def vector(self) -> np.ndarray:
        return np.array([self.mean_l, self.max_l, self.min_l, self.std_l, self.mean_cx, self.mean_cy])


def _sample_range(lo: float, hi: float) -> tuple[int, int]:
    """Indices i whose centers i+0.5 lie in [lo + margin, hi - margin)."""
    first = math.ceil(lo + MARGIN_PX - 0.5)
    last = math.ceil(hi - MARGIN_PX - 0.5) - 1
    return first, last


def extract(frame: MeasurementFrame, grid: PixelGrid) -> list[CellFeatures]:
    """Descriptors for every interior cell, row-major.

    Raises FeatureExtractionError when a cell retains no samples after the
    margin, naming the cell.
    """
    if grid.x_edges[-1] > frame.width + 0.5 or grid.y_edges[-1] > frame.height + 0.5:
        raise FeatureExtractionError(
            f"grid extends to ({grid.x_edges[-1]}, {grid.y_edges[-1]}) "
            f"outside frame {frame.width}x{frame.height}"
        )
    lum = frame.luminance.astype(np.float64)
    chroma_x = frame.chroma_x.astype(np.float64) if frame.has_chroma else None
    chroma_y = frame.chroma_y.astype(np.float64) if frame.has_chroma else None

    out: list[CellFeatures] = []
    for row in range(grid.n_rows):
        for col in range(grid.n_cols):
            if not grid.interior[row, col]:
                continue
            i0, i1 = _sample_range(grid.x_edges[col], grid.x_edges[col + 1])
            j0, j1 = _sample_range(grid.y_edges[row], grid.y_edges[row + 1])
            i0, j0 = max(i0, 0), max(j0, 0)
            i1, j1 = min(i1, frame.width - 1), min(j1, frame.height - 1)
            if i1 < i0 or j1 < j0:
                raise FeatureExtractionError(f"cell ({row},{col}) has no samples after margin")
            block = lum[j0 : j1 + 1, i0 : i1 + 1]
            if chroma_x is not None:
                mean_cx = float(chroma_x[j0 : j1 + 1, i0 : i1 + 1].mean())
                mean_cy = float(chroma_y[j0 : j1 + 1, i0 : i1 + 1].mean())
            else:
                mean_cx = mean_cy = NEUTRAL_CHROMA
            out.append(
                CellFeatures(
                    row=row,
                    col=col,
                    mean_l=float(block.mean()),
                    max_l=float(block.max()),
                    min_l=float(block.min()),
                    std_l=float(block.std()),
                    mean_cx=mean_cx,
                    mean_cy=mean_cy,
                )
            )
    return out


def feature_matrix(features: list[CellFeatures]) -> np.ndarray:
    """Stack descriptors into the n x 6 matrix consumed by the ml stage."""
    if not features:
        raise FeatureExtractionError("no features to stack")
    return np.stack([f.vector() for f in features])


def to_csv(features: list[CellFeatures]) -> str:
    lines = [CSV_HEADER]
    for f in features:
        lines.append(
            f"{f.row},{f.col},{f.mean_l!r},{f.max_l!r},{f.min_l!r},{f.std_l!r},{f.mean_cx!r},{f.mean_cy!r}"
        )
    return "\n".join(lines) + "\n"
