"""Per-case metric reports, cohort summaries and the delimited evaluation table."""

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from common.errors import ShapeError
from common.logger import get_logger, print_table
from volume_io.types import LabelMask

from .overlap import dsc
from .surface import extract_surface, hd, hd95

logger = get_logger(__name__)

REPORT_COLUMNS = ("case_id", "dsc", "hd_mm", "hd95_mm", "seconds")
SUMMARY_METRICS = ("dsc", "hd_mm", "hd95_mm", "seconds")
UNDEFINED = "undefined"


@dataclass(frozen=True)
class MetricsReport:
    """Evaluation of one predicted femur.

    hd_mm and hd95_mm are None when either mask is empty, so cohort statistics
    skip them instead of averaging an infinity. dsc is None only when both masks
    are empty and there is no overlap to score.
    """

    case_id: str
    dsc: float | None
    hd_mm: float | None
    hd95_mm: float | None
    prediction_seconds: float = 0.0

    @property
    def hd_defined(self) -> bool:
        return self.hd_mm is not None

    @property
    def dsc_defined(self) -> bool:
        return self.dsc is not None

    def row(self) -> list[str]:
        def fmt(value):
            return UNDEFINED if value is None else f"{value:.6f}"

        return [
            self.case_id,
            fmt(self.dsc),
            fmt(self.hd_mm),
            fmt(self.hd95_mm),
            f"{self.prediction_seconds:.3f}",
        ]


def evaluate_case(
    prediction: LabelMask, truth: LabelMask, seconds: float = 0.0, case_id: str = ""
) -> MetricsReport:
    """DSC, HD and HD95 of a prediction against its ground truth.

    Raises:
        ShapeError: dims or spacing differ
        DegenerateInputError: both masks empty
    """
    if prediction.dims != truth.dims or not np.allclose(prediction.spacing, truth.spacing):
        raise ShapeError(
            f"{case_id or 'case'}: prediction {prediction.dims} @ {prediction.spacing} does not "
            f"match ground truth {truth.dims} @ {truth.spacing}"
        )
    score = dsc(prediction, truth)

    if prediction.foreground_count == 0 or truth.foreground_count == 0:
        logger.warning(f"{case_id or 'case'}: empty mask, Hausdorff distance undefined")
        return MetricsReport(case_id, score, None, None, seconds)

    # Both surfaces are measured with the ground-truth spacing
    pred_surface = extract_surface(truth.with_data(prediction.data))
    truth_surface = extract_surface(truth)
    return MetricsReport(
        case_id=case_id,
        dsc=score,
        hd_mm=hd(pred_surface, truth_surface),
        hd95_mm=hd95(pred_surface, truth_surface),
        prediction_seconds=seconds,
    )


@dataclass(frozen=True)
class Summary:
    """Mean, sample standard deviation and five-number summary of one metric."""

    count: int
    mean: float
    sd: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def row(self, name: str) -> list[str]:
        values = [self.mean, self.sd, self.minimum, self.q1, self.median, self.q3, self.maximum]
        return [name, str(self.count), *(f"{v:.4f}" for v in values)]


SUMMARY_COLUMNS = ("metric", "n", "mean", "sd", "min", "q1", "median", "q3", "max")


def summarize(values: Sequence[float]) -> Summary | None:
    """None for an empty sequence; sd is 0 for a single value."""
    data = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if data.size == 0:
        return None
    q1, median, q3 = np.percentile(data, [25, 50, 75])
    return Summary(
        count=int(data.size),
        mean=float(data.mean()),
        sd=float(data.std(ddof=1)) if data.size > 1 else 0.0,
        minimum=float(data.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        maximum=float(data.max()),
    )


@dataclass(frozen=True)
class CohortSummary:
    metrics: dict[str, Summary | None]
    undefined_hd: int
    cases: int
    undefined_dsc: int = 0

    def rows(self) -> list[list[str]]:
        return [s.row(name) for name, s in self.metrics.items() if s is not None]


def summarize_reports(reports: Sequence[MetricsReport]) -> CohortSummary:
    columns = {
        "dsc": [r.dsc for r in reports],
        "hd_mm": [r.hd_mm for r in reports],
        "hd95_mm": [r.hd95_mm for r in reports],
        "seconds": [r.prediction_seconds for r in reports],
    }
    return CohortSummary(
        metrics={name: summarize(values) for name, values in columns.items()},
        undefined_hd=sum(not r.hd_defined for r in reports),
        cases=len(reports),
        undefined_dsc=sum(not r.dsc_defined for r in reports),
    )


def write_report(reports: Sequence[MetricsReport], path: str | Path) -> Path:
    """Tab-separated table, one row per case, followed by the cohort summary block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = summarize_reports(reports)

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, delimiter="\t")
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            writer.writerow(report.row())
        writer.writerow([])
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summary.rows())
        writer.writerow(["undefined_hd", str(summary.undefined_hd)])
        if summary.undefined_dsc:
            writer.writerow(["undefined_dsc", str(summary.undefined_dsc)])
    return path


def read_report(path: str | Path) -> list[MetricsReport]:
    """Per-case rows of a table written by write_report."""

    def value(text: str) -> float | None:
        return None if text == UNDEFINED else float(text)

    reports = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f, delimiter="\t")
        header = next(reader)
        if tuple(header) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                break
            case_id, score, hd_mm, hd95_mm, seconds = row
            reports.append(
                MetricsReport(case_id, value(score), value(hd_mm), value(hd95_mm), float(seconds))
            )
    return reports


def print_summary(summary: CohortSummary, title: str = "Cohort summary") -> None:
    print_table(title, list(SUMMARY_COLUMNS), summary.rows())
    if summary.undefined_hd:
        logger.warning(f"{summary.undefined_hd}/{summary.cases} cases have undefined HD")
    if summary.undefined_dsc:
        logger.warning(
            f"{summary.undefined_dsc}/{summary.cases} cases have two empty masks and no DSC"
        )

