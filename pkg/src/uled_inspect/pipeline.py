"""End-to-end analysis: rectification, grid reconstruction, feature
extraction, classification, and report emission.

A run is deterministic for a given configuration: the report JSON is
byte-identical across repeated runs.  On stage failure every artifact written
so far is removed, so an output directory never holds a partial result.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evaluation, features, geometry, grid, io, ml
from .errors import ConfigError, PipelineStageError

RECTIFY_MARGIN_PX = 10.0

ARTIFACT_NAMES = (
    "report.json",
    "projections_x.csv",
    "projections_y.csv",
    "features.csv",
    "grid.json",
    "overlay.svg",
)


@dataclass(frozen=True)
class PipelineConfig:
    frame_path: str
    output_dir: str
    defects_path: str | None = None
    corners: tuple[tuple[float, float], ...] | None = None
    rel_threshold: float = 0.1
    kmeans: ml.KMeansConfig = field(default_factory=ml.KMeansConfig)
    threads: int | None = None

    def __post_init__(self):
        if self.corners is not None and len(self.corners) != 4:
            raise ConfigError(f"explicit corners need exactly 4 points, got {len(self.corners)}")
        if not 0.0 < self.rel_threshold < 1.0:
            raise ConfigError(f"rel_threshold must lie in (0, 1), got {self.rel_threshold}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")


@dataclass(frozen=True)
class ClassificationReport:
    """Structured run result plus the emitted artifact paths."""

    report: dict
    artifacts: tuple[Path, ...]
    grid_metrics: grid.GridMetrics
    confusion: evaluation.ConfusionMatrix | None
    les_stats: evaluation.LesStats
    statuses: list[str]
    cell_features: list[features.CellFeatures]
    pixel_grid: grid.PixelGrid


def _thread_count(config: PipelineConfig) -> int:
    if config.threads is not None:
        return config.threads
    env = os.environ.get("ULED_INSPECT_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"ULED_INSPECT_THREADS={env!r} is not a positive integer") from None
        if value < 1:
            raise ConfigError(f"ULED_INSPECT_THREADS={env!r} is not a positive integer")
        return value
    return os.cpu_count() or 1


def _stage(name: str):
    class _StageGuard:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineStageError):
                raise PipelineStageError(name, exc) from exc
            return False

    return _StageGuard()


def _rectify(frame: io.MeasurementFrame, corners) -> tuple[io.MeasurementFrame, geometry.Homography]:
    tl, tr, br, bl = (np.asarray(p, dtype=np.float64) for p in corners)
    width = (np.hypot(*(tr - tl)) + np.hypot(*(br - bl))) / 2.0
    height = (np.hypot(*(bl - tl)) + np.hypot(*(br - tr))) / 2.0
    if width < 2.0 or height < 2.0:
        raise ConfigError(f"degenerate corner quad (side lengths {width:.2f} x {height:.2f})")
    m = RECTIFY_MARGIN_PX
    dst = [(m, m), (m + width, m), (m + width, m + height), (m, m + height)]
    h = geometry.estimate_homography([tuple(tl), tuple(tr), tuple(br), tuple(bl)], dst)
    out_w = int(math.ceil(width + 2 * m))
    out_h = int(math.ceil(height + 2 * m))
    return geometry.warp_frame(frame, h, out_w, out_h), h


def _reconstruct(projection: grid.AxisProjection) -> np.ndarray:
    period = grid.estimate_period(projection)
    return grid.detect_edges(projection, period)


def _heat_color(value: float) -> str:
    level = int(round(255 * min(max(value, 0.0), 1.0)))
    return f"#{level:02x}{level:02x}{level:02x}"


def _overlay_svg(pixel_grid: grid.PixelGrid, cell_features, statuses) -> str:
    xs, ys = pixel_grid.x_edges, pixel_grid.y_edges
    width, height = xs[-1] + xs[0], ys[-1] + ys[0]
    peak = max((f.mean_l for f in cell_features), default=1.0) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.1f} {height:.1f}">',
        f'<rect x="0" y="0" width="{width:.1f}" height="{height:.1f}" fill="black"/>',
    ]
    for f in cell_features:
        x0, x1 = xs[f.col], xs[f.col + 1]
        y0, y1 = ys[f.row], ys[f.row + 1]
        parts.append(
            f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" '
            f'fill="{_heat_color(f.mean_l / peak)}"/>'
        )
    for x in xs:
        parts.append(
            f'<line x1="{x:.2f}" y1="{ys[0]:.2f}" x2="{x:.2f}" y2="{ys[-1]:.2f}" '
            'stroke="#3366cc" stroke-width="0.5"/>'
        )
    for y in ys:
        parts.append(
            f'<line x1="{xs[0]:.2f}" y1="{y:.2f}" x2="{xs[-1]:.2f}" y2="{y:.2f}" '
            'stroke="#3366cc" stroke-width="0.5"/>'
        )
    for f, status in zip(cell_features, statuses):
        if status == ml.STATUS_DEFECT:
            x0, x1 = xs[f.col], xs[f.col + 1]
            y0, y1 = ys[f.row], ys[f.row + 1]
            parts.append(
                f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" '
                'fill="none" stroke="#dd2222" stroke-width="1.2"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def run(config: PipelineConfig) -> ClassificationReport:
    """Execute every stage in order and emit the artifact set.

    Raises PipelineStageError naming the failed stage; no artifacts survive a
    failed run.
    """
    threads = _thread_count(config)

    with _stage("read_frame"):
        frame = io.read_frame(config.frame_path)
    truth = None
    if config.defects_path is not None:
        with _stage("read_defects"):
            truth = io.read_defect_map(config.defects_path)
    with _stage("corners"):
        if config.corners is not None:
            corners = [tuple(map(float, p)) for p in config.corners]
        else:
            corners = geometry.detect_corners(frame, config.rel_threshold)
    with _stage("rectify"):
        rectified, _ = _rectify(frame, corners)
    with _stage("project"):
        proj_x, proj_y = grid.project(rectified)
    with _stage("reconstruct_grid"):
        x_edges = _reconstruct(proj_x)
        y_edges = _reconstruct(proj_y)
        pixel_grid = grid.build_grid(x_edges, y_edges)
    with _stage("cell_metrics"):
        metrics = grid.cell_size(pixel_grid)
    with _stage("features"):
        cell_features = features.extract(rectified, pixel_grid)
    with _stage("classify"):
        matrix = features.feature_matrix(cell_features)
        _, standardized = ml.standardize_fit_transform(matrix)
        pca = ml.pca_fit(standardized)
        projected = ml.pca_transform(pca, standardized)
        model = ml.kmeans_fit(projected, config.kmeans, threads=threads)
        statuses, degenerate = ml.label_clusters(model, cell_features)

    confusion_matrix = None
    if truth is not None:
        with _stage("confusion"):
            confusion_matrix = evaluation.confusion(statuses, truth, pixel_grid)
    with _stage("les_stats"):
        les = evaluation.les_statistics(cell_features, statuses)

    flags = {
        "degenerate_clustering": degenerate,
        "confusion_skipped": truth is None,
        "fnr_undefined": bool(confusion_matrix.fnr_undefined) if confusion_matrix else False,
        "fpr_undefined": bool(confusion_matrix.fpr_undefined) if confusion_matrix else False,
    }
    per_cell = []
    for f, status in zip(cell_features, statuses):
        entry = {
            "row": f.row,
            "col": f.col,
            "mean_l": f.mean_l,
            "max_l": f.max_l,
            "min_l": f.min_l,
            "std_l": f.std_l,
            "mean_cx": f.mean_cx,
            "mean_cy": f.mean_cy,
            "predicted": status,
        }
        if truth is not None:
            entry["truth"] = (
                ml.STATUS_DEFECT if truth.defective[f.row, f.col] else ml.STATUS_FUNCTIONAL
            )
        per_cell.append(entry)
    report = {
        "grid_metrics": {
            "mean_cell_width": metrics.mean_cell_width,
            "mean_cell_height": metrics.mean_cell_height,
            "std_cell_width": metrics.std_cell_width,
            "std_cell_height": metrics.std_cell_height,
            "n_rows": pixel_grid.n_rows,
            "n_cols": pixel_grid.n_cols,
        },
        "confusion": None
        if confusion_matrix is None
        else {
            "true_functional_pred_functional": confusion_matrix.true_functional_pred_functional,
            "true_functional_pred_defect": confusion_matrix.true_functional_pred_defect,
            "true_defect_pred_functional": confusion_matrix.true_defect_pred_functional,
            "true_defect_pred_defect": confusion_matrix.true_defect_pred_defect,
            "accuracy": confusion_matrix.accuracy,
            "false_negative_rate": confusion_matrix.false_negative_rate,
            "false_positive_rate": confusion_matrix.false_positive_rate,
        },
        "les_stats": {
            "raw_mean": les.raw_mean,
            "raw_sem": les.raw_sem,
            "denoised_mean": les.denoised_mean,
            "denoised_sem": les.denoised_sem,
            "raw_count": les.raw_count,
            "denoised_count": les.denoised_count,
        },
        "per_cell": per_cell,
        "flags": flags,
    }

    out_dir = Path(config.output_dir)
    written: list[Path] = []
    try:
        with _stage("artifacts"):
            out_dir.mkdir(parents=True, exist_ok=True)
            payloads = {
                "report.json": json.dumps(report, sort_keys=True, indent=2) + "\n",
                "projections_x.csv": proj_x.to_csv(),
                "projections_y.csv": proj_y.to_csv(),
                "features.csv": features.to_csv(cell_features),
                "grid.json": pixel_grid.to_json() + "\n",
                "overlay.svg": _overlay_svg(pixel_grid, cell_features, statuses),
            }
            for name in ARTIFACT_NAMES:
                path = out_dir / name
                path.write_text(payloads[name], encoding="ascii")
                written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise

    return ClassificationReport(
        report=report,
        artifacts=tuple(written),
        grid_metrics=metrics,
        confusion=confusion_matrix,
        les_stats=les,
        statuses=statuses,
        cell_features=cell_features,
        pixel_grid=pixel_grid,
    )
