"""Projective correction: homography estimation, point mapping, inverse warping,
and detection of the light-emitting-surface corners.

Coordinate convention used throughout the package: continuous image
coordinates with sample (i, j) covering the unit square [i, i+1) x [j, j+1),
so its center sits at (i + 0.5, j + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GeometryError
from .io import MeasurementFrame

Point = tuple[float, float]

_DET_EPS = 1e-12


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, normalized so the bottom-right entry is 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise GeometryError(f"homography matrix must be 3x3, got {m.shape}")
        if abs(m[2, 2]) < _DET_EPS:
            raise GeometryError("homography bottom-right entry is ~0; cannot normalize")
        if m[2, 2] != 1.0:
            m = m / m[2, 2]
        if abs(float(np.linalg.det(m))) <= _DET_EPS:
            raise GeometryError("homography is singular (|det| <= 1e-12)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(_adjugate(self.matrix))


def _adjugate(m: np.ndarray) -> np.ndarray:
    # Exact for the identity, unlike a generic LU-based inverse.
    out = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            minor = np.delete(np.delete(m, r, axis=0), c, axis=1)
            out[c, r] = (-1) ** (r + c) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return out


def _check_not_collinear(points: np.ndarray, label: str) -> None:
    span = float(np.ptp(points, axis=0).max())
    tol = 1e-9 * max(span * span, 1.0)
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                a, b, c = points[i], points[j], points[k]
                area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
                if area2 <= tol:
                    raise GeometryError(
                        f"{label} points {i},{j},{k} are collinear; homography is underdetermined"
                    )


def estimate_homography(src: Sequence[Point], dst: Sequence[Point]) -> Homography:
    """Exact homography from 4 point correspondences.

    Solves the 8x8 linear system for the entries h11..h32 with h33 fixed to 1.
    Raises GeometryError when any three source or destination points are
    collinear or the system is singular.
    """
    s = np.asarray(src, dtype=np.float64)
    d = np.asarray(dst, dtype=np.float64)
    if s.shape != (4, 2) or d.shape != (4, 2):
        raise GeometryError("estimate_homography needs exactly 4 source and 4 destination points")
    _check_not_collinear(s, "source")
    _check_not_collinear(d, "destination")

    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i in range(4):
        x, y = s[i]
        u, v = d[i]
        a[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        a[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * i] = u
        b[2 * i + 1] = v
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"degenerate correspondences: {exc}") from exc
    return Homography(np.append(h, 1.0).reshape(3, 3))


def apply_homography(h: Homography, point: Point) -> Point:
    x, y = point
    m = h.matrix
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(w) < _DET_EPS:
        raise GeometryError(f"point {point} maps to the horizon (w ~ 0)")
    return (
        (m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w,
        (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w,
    )


def apply_homography_array(h: Homography, points: np.ndarray) -> np.ndarray:
    """Vectorized apply_homography for an (n, 2) array."""
    pts = np.asarray(points, dtype=np.float64)
    m = h.matrix
    w = m[2, 0] * pts[:, 0] + m[2, 1] * pts[:, 1] + m[2, 2]
    if np.any(np.abs(w) < _DET_EPS):
        raise GeometryError("a point maps to the horizon (w ~ 0)")
    u = (m[0, 0] * pts[:, 0] + m[0, 1] * pts[:, 1] + m[0, 2]) / w
    v = (m[1, 0] * pts[:, 0] + m[1, 1] * pts[:, 1] + m[1, 2]) / w
    return np.stack([u, v], axis=1)


def warp_plane(plane: np.ndarray, inv: np.ndarray, out_width: int, out_height: int) -> np.ndarray:
    src = plane.astype(np.float64)
    xs = np.arange(out_width) + 0.5
    ys = np.arange(out_height) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    w = inv[2, 0] * gx + inv[2, 1] * gy + inv[2, 2]
    valid = np.abs(w) >= _DET_EPS
    w_safe = np.where(valid, w, 1.0)
    u = (inv[0, 0] * gx + inv[0, 1] * gy + inv[0, 2]) / w_safe
    v = (inv[1, 0] * gx + inv[1, 1] * gy + inv[1, 2]) / w_safe

    fu = u - 0.5
    fv = v - 0.5
    iu = np.floor(fu).astype(np.int64)
    iv = np.floor(fv).astype(np.int64)
    du = fu - iu
    dv = fv - iv

    h_src, w_src = src.shape
    out = np.zeros((out_height, out_width))
    for oy, ox, weight in (
        (0, 0, (1 - du) * (1 - dv)),
        (0, 1, du * (1 - dv)),
        (1, 0, (1 - du) * dv),
        (1, 1, du * dv),
    ):
        sx = iu + ox
        sy = iv + oy
        inside = valid & (sx >= 0) & (sx < w_src) & (sy >= 0) & (sy < h_src)
        out[inside] += weight[inside] * src[sy[inside], sx[inside]]
    return out


def warp_frame(frame: MeasurementFrame, h: Homography, out_width: int, out_height: int) -> MeasurementFrame:
    """Inverse-map the frame through h with bilinear interpolation.

    Each output sample center is pulled back through h^-1; sources outside the
    input frame contribute 0.  Chroma planes, when present, are warped with the
    same mapping.
    """
    if out_width <= 0 or out_height <= 0:
        raise GeometryError(f"output size must be positive, got {out_width}x{out_height}")
    inv = h.inverse().matrix
    lum = warp_plane(frame.luminance, inv, out_width, out_height)
    if frame.has_chroma:
        cx = warp_plane(frame.chroma_x, inv, out_width, out_height)
        cy = warp_plane(frame.chroma_y, inv, out_width, out_height)
        return MeasurementFrame(out_width, out_height, lum, np.clip(cx, 0.0, 1.0), np.clip(cy, 0.0, 1.0))
    return MeasurementFrame(out_width, out_height, lum)


def _fit_line(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Total-least-squares line; returns (point_on_line, unit_direction)."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    sxx = float((centered[:, 0] ** 2).sum())
    syy = float((centered[:, 1] ** 2).sum())
    sxy = float((centered[:, 0] * centered[:, 1]).sum())
    # Direction = major eigenvector of the 2x2 scatter matrix.
    theta = 0.5 * np.arctan2(2.0 * sxy, sxx - syy)
    direction = np.array([np.cos(theta), np.sin(theta)])
    return centroid, direction


def _intersect(p1, d1, p2, d2, fallback):
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-9:
        return np.asarray(fallback, dtype=np.float64)
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / denom
    return p1 + t * d1


_SIDE_TRIM = 0.08
_SIDE_RESIDUAL_PX = 1.5


def _fit_side(points: np.ndarray, trim_axis: int, fallback: tuple[np.ndarray, np.ndarray]):
    """Total-least-squares side line, end-trimmed and outlier-rejected.

    The trim drops points near the quad corners (where a row's extreme sample
    can belong to the adjacent side); the rejection passes drop points pushed
    a full pitch inward by dark cells on the array border."""
    if len(points) < 2:
        return fallback
    coord = points[:, trim_axis]
    lo, hi = float(coord.min()), float(coord.max())
    margin = _SIDE_TRIM * (hi - lo)
    trimmed = points[(coord >= lo + margin) & (coord <= hi - margin)]
    if len(trimmed) < 2:
        trimmed = points
    point, direction = _fit_line(trimmed)
    for _ in range(2):
        normal = np.array([-direction[1], direction[0]])
        residual = np.abs((trimmed - point) @ normal)
        threshold = max(_SIDE_RESIDUAL_PX, 3.0 * float(np.median(residual)))
        inliers = trimmed[residual <= threshold]
        if len(inliers) < max(2, len(trimmed) // 2) or len(inliers) == len(trimmed):
            break
        point, direction = _fit_line(inliers)
    return point, direction


def detect_corners(frame: MeasurementFrame, rel_threshold: float) -> list[Point]:
    """Locate the four corners of the bright region, ordered TL, TR, BR, BL.

    Thresholds the luminance at rel_threshold * max and fits the four boundary
    lines of the retained samples' pixel footprints (per-row extremes for the
    left/right sides, per-column extremes for top/bottom).  Adjacent side
    intersections give the quad enclosing the bright region.  Assumes the
    array is within +-45 degrees of axis-aligned, which the measurement
    geometry guarantees.
    """
    if not 0.0 < rel_threshold < 1.0:
        raise GeometryError(f"rel_threshold must lie in (0, 1), got {rel_threshold}")
    lum = frame.luminance
    peak = float(lum.max())
    if peak <= 0.0:
        raise GeometryError("frame has no positive luminance; cannot detect corners")
    mask = lum >= rel_threshold * peak

    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    if rows.size < 2 or cols.size < 2:
        raise GeometryError("fewer than 4 boundary candidates above threshold")

    left_pts, right_pts = [], []
    for r in rows.tolist():
        line = np.nonzero(mask[r])[0]
        left_pts.append((float(line[0]), r + 0.5))
        right_pts.append((float(line[-1]) + 1.0, r + 0.5))
    top_pts, bottom_pts = [], []
    for c in cols.tolist():
        line = np.nonzero(mask[:, c])[0]
        top_pts.append((c + 0.5, float(line[0])))
        bottom_pts.append((c + 0.5, float(line[-1]) + 1.0))

    x_lo, x_hi = float(cols[0]), float(cols[-1]) + 1.0
    y_lo, y_hi = float(rows[0]), float(rows[-1]) + 1.0
    down = np.array([0.0, 1.0])
    across = np.array([1.0, 0.0])
    sides = {
        "left": _fit_side(np.asarray(left_pts), 1, (np.array([x_lo, 0.0]), down)),
        "right": _fit_side(np.asarray(right_pts), 1, (np.array([x_hi, 0.0]), down)),
        "top": _fit_side(np.asarray(top_pts), 0, (np.array([0.0, y_lo]), across)),
        "bottom": _fit_side(np.asarray(bottom_pts), 0, (np.array([0.0, y_hi]), across)),
    }
    corners = []
    for first, second, fallback in (
        ("top", "left", (x_lo, y_lo)),
        ("top", "right", (x_hi, y_lo)),
        ("bottom", "right", (x_hi, y_hi)),
        ("bottom", "left", (x_lo, y_hi)),
    ):
        p1, d1 = sides[first]
        p2, d2 = sides[second]
        corner = _intersect(p1, d1, p2, d2, fallback)
        corners.append((float(corner[0]), float(corner[1])))
    return corners
