"""Quality metrics over wrapped and unwrapped phase estimates.

PSNR is computed on the wrapped difference, so it is blind to 2*pi offsets.
For an externally unwrapped estimate, pixels whose error exceeds pi are
counted separately (``nelp``) and the amplitude PSNR is evaluated over the
remaining pixels only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .imagecore import PhaseImage, wrap


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    n_pixels: int
    nelp: int | None = None
    psnr_a_db: float | None = None

    def __post_init__(self):
        if self.nelp is not None and self.nelp > self.n_pixels:
            raise InvalidInputError("nelp cannot exceed the pixel count")


def _check_shapes(a: PhaseImage, b: PhaseImage) -> None:
    if a.data.shape != b.data.shape:
        raise InvalidInputError(
            f"phase images disagree on shape: {a.data.shape} vs {b.data.shape}"
        )


def psnr(est_wrapped: PhaseImage, truth_unwrapped: PhaseImage) -> float:
    """Peak SNR (dB) of a wrapped estimate: 10*log10(4*N*pi^2 / ||W(err)||^2).

    Returns +inf when the wrapped error is identically zero.
    """
    _check_shapes(est_wrapped, truth_unwrapped)
    if not est_wrapped.wrapped:
        raise InvalidInputError("estimate must be flagged wrapped")
    err = wrap(est_wrapped.data - truth_unwrapped.data)
    sq_norm = float(np.sum(err * err))
    n = est_wrapped.data.size
    if sq_norm == 0.0:
        return math.inf
    return 10.0 * math.log10(4.0 * n * math.pi ** 2 / sq_norm)


def nelp_psnr_a(est_unwrapped: PhaseImage, truth_unwrapped: PhaseImage) -> tuple[int, float]:
    """Error count above pi, and the PSNR over the small-error pixels.

    The pixel count in the numerator stays the full N even though the error
    sum runs over the small-error set only. Returns -inf for the PSNR when no
    pixel has error <= pi, +inf when the small-error pixels are exact.
    """
    _check_shapes(est_unwrapped, truth_unwrapped)
    if est_unwrapped.wrapped or truth_unwrapped.wrapped:
        raise InvalidInputError("both inputs must be unwrapped phase images")
    diff = est_unwrapped.data - truth_unwrapped.data
    small = np.abs(diff) <= math.pi
    nelp = int(diff.size - small.sum())
    if not small.any():
        return nelp, -math.inf
    sq_norm = float(np.sum(diff[small] ** 2))
    if sq_norm == 0.0:
        return nelp, math.inf
    return nelp, 10.0 * math.log10(4.0 * diff.size * math.pi ** 2 / sq_norm)


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def format_report(report: MetricReport) -> str:
    """Render a report as key=value lines; infinities appear as inf / -inf."""
    lines = [f"psnr_db={_fmt(report.psnr_db)}"]
    if report.nelp is not None:
        lines.append(f"nelp={report.nelp}")
    if report.psnr_a_db is not None:
        lines.append(f"psnr_a_db={_fmt(report.psnr_a_db)}")
    lines.append(f"n_pixels={report.n_pixels}")
    return "\n".join(lines) + "\n"


def report_record(report: MetricReport) -> dict:
    """Report as a JSON-safe record; infinities become the strings inf / -inf."""
    record = {"psnr_db": _fmt(report.psnr_db) if math.isinf(report.psnr_db)
              else report.psnr_db}
    if report.nelp is not None:
        record["nelp"] = report.nelp
    if report.psnr_a_db is not None:
        record["psnr_a_db"] = (_fmt(report.psnr_a_db) if math.isinf(report.psnr_a_db)
                               else report.psnr_a_db)
    record["n_pixels"] = report.n_pixels
    return record
