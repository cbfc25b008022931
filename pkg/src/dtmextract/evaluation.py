"""Residual statistics and log10-frequency residual histograms."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, ShapeMismatch
from .raster import Grid

DEFAULT_BIN_WIDTH = 0.05
DEFAULT_RANGE = (-5.0, 5.0)


@dataclass(frozen=True)
class HistogramBin:
    lower: float
    upper: float
    frequency: int

    @property
    def log10_frequency(self) -> float:
        return math.log10(max(self.frequency, 1))


@dataclass(frozen=True)
class ResidualStats:
    mean: float
    median: float
    mse: float
    count: int
    histogram: tuple[HistogramBin, ...]

    @property
    def rmse(self) -> float:
        return math.sqrt(self.mse)

    def to_json_dict(self) -> dict:
        return {
            "mean_m": self.mean,
            "median_m": self.median,
            "mse_m2": self.mse,
            "rmse_m": self.rmse,
            "count": self.count,
        }


def residuals(reference: Grid, estimate: Grid) -> np.ndarray:
    """Per-cell ``reference - estimate`` in vector-index order."""
    if reference.shape != estimate.shape:
        raise ShapeMismatch(f"reference {reference.shape} vs estimate {estimate.shape}")
    return (reference.values - estimate.values).reshape(-1)


def histogram_edges(bin_width: float, value_range: tuple[float, float]) -> np.ndarray:
    lo, hi = value_range
    if not bin_width > 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    if not lo < hi:
        raise ValueError(f"range must satisfy lo < hi, got {value_range}")
    n_bins = max(1, int(round((hi - lo) / bin_width)))
    return lo + bin_width * np.arange(n_bins + 1)


def compute_stats(
    r,
    bin_width: float = DEFAULT_BIN_WIDTH,
    value_range: tuple[float, float] = DEFAULT_RANGE,
) -> ResidualStats:
    """Mean, lower median, MSE and a histogram of residuals ``r``.

    Regular bins are half-open ``[lower, upper)``; values below the range
    fall in a ``(-inf, lo)`` bin and values at or above its top in a
    ``[hi, inf)`` bin, so every residual is counted exactly once.
    """
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    if r.size == 0:
        raise EmptyInput("no residuals to summarise")
    if not np.all(np.isfinite(r)):
        raise ValueError("residuals must be finite")
    edges = histogram_edges(bin_width, value_range)
    n_bins = len(edges) - 1

    # index 0 is the low overflow bin, n_bins + 1 the high one
    idx = np.searchsorted(edges, r, side="right")
    idx[r >= edges[-1]] = n_bins + 1
    counts = np.bincount(idx, minlength=n_bins + 2)

    bins = [HistogramBin(-math.inf, float(edges[0]), int(counts[0]))]
    bins += [
        HistogramBin(float(edges[k]), float(edges[k + 1]), int(counts[k + 1]))
        for k in range(n_bins)
    ]
    bins.append(HistogramBin(float(edges[-1]), math.inf, int(counts[-1])))

    ordered = np.sort(r)
    return ResidualStats(
        mean=float(r.mean()),
        median=float(ordered[(r.size - 1) // 2]),
        mse=float(np.mean(r * r)),
        count=int(r.size),
        histogram=tuple(bins),
    )


def histogram_csv(stats: ResidualStats) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_lower", "bin_upper", "frequency", "log10_frequency"])
    for b in stats.histogram:
        writer.writerow([repr(b.lower), repr(b.upper), b.frequency, repr(b.log10_frequency)])
    return buf.getvalue()


def stats_json(stats: ResidualStats) -> str:
    return json.dumps(stats.to_json_dict(), indent=2, sort_keys=True) + "\n"
