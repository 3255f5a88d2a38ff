"""Low-moment robust estimators of skewness and kurtosis.

Heavy-tailed return samples make third and fourth sample moments nearly
useless, so shape is measured here through low-order statistics instead:

* skewness from the mean-median gap,

      zeta = 6 (mean - median) / sigma,

  which vanishes for symmetric laws and matches the classical Pearson
  construction up to its conventional factor;
* kurtosis from the mean absolute deviation (taken about the mean),

      kappa = 24 (1 - sqrt(pi/2) * mad / sigma),

  calibrated so a Gaussian sample gives kappa -> 0 (Gaussian mad / sigma is
  sqrt(2/pi)).  Fatter tails shrink mad relative to sigma and push kappa
  up; kappa never exceeds 24.  An optional additive zeta^2 correction term
  compensates skewness leakage; it is off by default and numerically
  negligible for daily equity panels.

``sigma`` throughout is the population standard deviation (1/T
normalization).  A zero-dispersion sample has no defined shape: scalar
kernels raise :class:`DegenerateSampleError`, and grid evaluation marks the
cell degenerate instead of inventing a value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, InsufficientDataError
from .panel import ReturnPanel, _PanelView

ROOT_HALF_PI = float(np.sqrt(np.pi / 2.0))


@dataclass(frozen=True)
class MomentSet:
    """Per-sample moment bundle; ``skewness``/``kurtosis`` are None when the
    sample is degenerate (zero dispersion)."""

    mean: float
    volatility: float
    skewness: float | None
    kurtosis: float | None
    median: float
    sample_count: int

    @property
    def degenerate(self) -> bool:
        return self.skewness is None


def _clean_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values")
    return arr


def sample_mean_var_median(x) -> tuple[float, float, float]:
    """Mean, population variance (1/T), and median of a 1-D sample."""
    arr = _clean_1d(x)
    return float(arr.mean()), float(arr.var()), float(np.median(arr))


def mean_abs_deviation(x) -> float:
    """Mean absolute deviation about the sample mean."""
    arr = _clean_1d(x)
    return float(np.abs(arr - arr.mean()).mean())


def low_moment_skewness(x) -> float:
    """Mean-median skewness, 6 (mean - median) / sigma."""
    mean, var, median = sample_mean_var_median(x)
    sigma = np.sqrt(var)
    if sigma == 0.0:
        raise DegenerateSampleError("zero dispersion, skewness undefined")
    return 6.0 * (mean - median) / sigma

def low_moment_kurtosis(x, include_skew_correction: bool = False) -> float:
    """MAD-based kurtosis, 24 (1 - sqrt(pi/2) mad / sigma) [+ zeta^2]."""
    arr = _clean_1d(x)
    mean = arr.mean()
    sigma = float(arr.std())
    if sigma == 0.0:
        raise DegenerateSampleError("zero dispersion, kurtosis undefined")
    mad = float(np.abs(arr - mean).mean())
    kappa = 24.0 * (1.0 - ROOT_HALF_PI * mad / sigma)
    if include_skew_correction:
        zeta = 6.0 * (mean - float(np.median(arr))) / sigma
        kappa += zeta * zeta
    return float(kappa)


def moment_set(x, include_skew_correction: bool = False) -> MomentSet:
    """All low-moment statistics of one sample as a :class:`MomentSet`."""
    arr = _clean_1d(x)
    mean = float(arr.mean())
    sigma = float(arr.std())
    median = float(np.median(arr))
    if sigma == 0.0:
        return MomentSet(mean, 0.0, None, None, median, arr.size)
    zeta = 6.0 * (mean - median) / sigma
    mad = float(np.abs(arr - mean).mean())
    kappa = 24.0 * (1.0 - ROOT_HALF_PI * mad / sigma)
    if include_skew_correction:
        kappa += zeta * zeta
    return MomentSet(mean, sigma, zeta, kappa, median, arr.size)


def grid_moments(values: np.ndarray, axis: int):
    """Vectorized kernel evaluation along ``axis`` of an array.

    Returns (mean, volatility, skewness, kurtosis, median, mad, degenerate);
    degenerate slots hold NaN in the shape statistics and True in the mask.
    The same kernel backs both time-series and cross-sectional use.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[axis] < 2:
        raise InsufficientDataError(
            f"need at least 2 observations along axis {axis}"
        )
    mean = values.mean(axis=axis)
    vol = values.std(axis=axis)
    median = np.median(values, axis=axis)
    mad = np.abs(values - np.expand_dims(mean, axis)).mean(axis=axis)
    degenerate = vol == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = 6.0 * (mean - median) / vol
        kurt = 24.0 * (1.0 - ROOT_HALF_PI * mad / vol)
    skew = np.where(degenerate, np.nan, skew)
    kurt = np.where(degenerate, np.nan, kurt)
    return mean, vol, skew, kurt, median, mad, degenerate


@dataclass(frozen=True)
class MomentGrid:
    """Per (stock, bin) moment arrays over days; NaN marks degenerate cells,
    mirrored by the ``degenerate`` mask."""

    mean: np.ndarray
    volatility: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    median: np.ndarray
    degenerate: np.ndarray
    bin_numbers: np.ndarray
    stock_ids: tuple[str, ...]
    sample_count: int

    def at(self, stock_index: int, bin_number: int) -> MomentSet:
        cols = list(self.bin_numbers)
        if bin_number not in cols:
            raise ValueError(f"bin {bin_number} not in grid")
        c = cols.index(bin_number)
        if self.degenerate[stock_index, c]:
            return MomentSet(
                float(self.mean[stock_index, c]),
                0.0,
                None,
                None,
                float(self.median[stock_index, c]),
                self.sample_count,
            )
        return MomentSet(
            float(self.mean[stock_index, c]),
            float(self.volatility[stock_index, c]),
            float(self.skewness[stock_index, c]),
            float(self.kurtosis[stock_index, c]),
            float(self.median[stock_index, c]),
            self.sample_count,
        )


def stock_bin_moments(panel: ReturnPanel | _PanelView) -> MomentGrid:
    """Evaluate the kernels over days for every (stock, bin) cell.

    Includes the overnight bin when the panel carries one.  Degenerate
    cells (a stock flat across all days in a bin) propagate as markers
    without aborting the rest of the grid.
    """
    mean, vol, skew, kurt, median, _, degenerate = grid_moments(panel.returns, axis=1)
    return MomentGrid(
        mean=mean,
        volatility=vol,
        skewness=skew,
        kurtosis=kurt,
        median=median,
        degenerate=degenerate,
        bin_numbers=panel.bin_numbers,
        stock_ids=panel.stock_ids,
        sample_count=panel.n_days,
    )
