"""Spacing-aware segmentation metrics: DSC, Hausdorff distance and HD95."""

from .overlap import dsc
from .report import (
    CohortSummary,
    MetricsReport,
    Summary,
    evaluate_case,
    print_summary,
    read_report,
    summarize,
    summarize_reports,
    write_report,
)
from .surface import (
    SurfacePointSet,
    directed_hd,
    extract_surface,
    hd,
    hd95,
    nearest_distances,
    surface_voxels,
)

__all__ = [
    "CohortSummary",
    "MetricsReport",
    "Summary",
    "SurfacePointSet",
    "directed_hd",
    "dsc",
    "evaluate_case",
    "extract_surface",
    "hd",
    "hd95",
    "nearest_distances",
    "print_summary",
    "read_report",
    "summarize",
    "summarize_reports",
    "surface_voxels",
    "write_report",
]
