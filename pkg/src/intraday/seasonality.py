"""Intraday profiles: per-bin averages, error bands, and power-law fits.

A profile reduces a per-bin statistic to one value per intraday bin plus an
optional overnight point.  Two band kinds are supported:

* ``stderr``: standard error of the mean, population std / sqrt(count);
* ``dispersion``: the 1-sigma spread itself (population std).

Seasonal volatility decay is summarized by fitting ``A * k**(-beta)`` in
log-log coordinates by ordinary least squares over a bin window; the
overnight bin never enters a fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cross_section import dispersion_grid
from .errors import InsufficientDataError
from .panel import ReturnPanel, _PanelView

BAND_KINDS = ("stderr", "dispersion")
FIT_WINDOW_PRESETS = ("first_half", "first_two_hours")
BINS_PER_HOUR_DEFAULT = 12  # five-minute bars


@dataclass(frozen=True)
class IntradayProfile:
    """One value and band per intraday bin, plus an optional overnight point."""

    bins: np.ndarray
    values: np.ndarray
    band: np.ndarray
    overnight_value: float | None
    overnight_band: float | None
    statistic_name: str
    band_kind: str

    def value_at(self, bin_number: int) -> float:
        if bin_number == 0:
            if self.overnight_value is None:
                raise ValueError("profile has no overnight point")
            return self.overnight_value
        idx = np.nonzero(self.bins == bin_number)[0]
        if idx.size == 0:
            raise ValueError(f"bin {bin_number} not in profile")
        return float(self.values[idx[0]])


def _reduce(samples: np.ndarray, band_kind: str, bin_numbers, statistic_name: str):
    """samples: (n_obs, n_cols) -> per-column value/band split on bin 0."""
    if band_kind not in BAND_KINDS:
        raise ValueError(f"unknown band kind {band_kind!r}, expected {BAND_KINDS}")
    samples = np.asarray(samples, dtype=np.float64)
    n_obs, n_cols = samples.shape
    if n_obs < 1:
        raise InsufficientDataError("no observations to profile")
    if bin_numbers is None:
        bin_numbers = np.arange(1, n_cols + 1)
    bin_numbers = np.asarray(list(bin_numbers), dtype=int)
    if bin_numbers.size != n_cols:
        raise ValueError(
            f"{bin_numbers.size} bin labels for {n_cols} columns"
        )
    values = samples.mean(axis=0)
    spread = samples.std(axis=0)
    band = spread if band_kind == "dispersion" else spread / np.sqrt(n_obs)

    overnight_value = overnight_band = None
    intraday = bin_numbers != 0
    if (~intraday).any():
        c = int(np.nonzero(~intraday)[0][0])
        overnight_value = float(values[c])
        overnight_band = float(band[c])
    return IntradayProfile(
        bins=bin_numbers[intraday].copy(),
        values=values[intraday].copy(),
        band=band[intraday].copy(),
        overnight_value=overnight_value,
        overnight_band=overnight_band,
        statistic_name=statistic_name,
        band_kind=band_kind,
    )


def profile_over_days(
    series: np.ndarray,
    band_kind: str = "stderr",
    bin_numbers=None,
    statistic_name: str = "",
) -> IntradayProfile:
    """Average a (bin, day) series over days.

    ``bin_numbers`` labels the rows; a row labeled 0 becomes the overnight
    point.  Without labels rows are taken as bins 1..K.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise ValueError("series must be 2-D (bin, day)")
    return _reduce(series.T, band_kind, bin_numbers, statistic_name)


def profile_over_stocks(
    series: np.ndarray,
    band_kind: str = "stderr",
    bin_numbers=None,
    statistic_name: str = "",
) -> IntradayProfile:
    """Average a (stock, bin) series over stocks."""
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise ValueError("series must be 2-D (stock, bin)")
    return _reduce(series, band_kind, bin_numbers, statistic_name)


def index_abs_return_profile(
    panel: ReturnPanel | _PanelView, band_kind: str = "stderr"
) -> IntradayProfile:
    """Per-bin average of |mu_d(k;t)|, the absolute equiweighted index return."""
    grid = dispersion_grid(panel)
    return profile_over_days(
        np.abs(grid.index_return),
        band_kind=band_kind,
        bin_numbers=grid.bin_numbers,
        statistic_name="abs_index_return",
    )


def ratio_profile(
    numerator: IntradayProfile,
    denominator: IntradayProfile,
    statistic_name: str | None = None,
) -> IntradayProfile:
    """Pointwise ratio of two profiles with quadrature error propagation.

    band(r)/|r| = sqrt((band_n/n)^2 + (band_d/d)^2).  Bins must agree; a
    zero denominator value is an error naming the bin.  The overnight point
    carries through only when both profiles have one.
    """
    if numerator.bins.shape != denominator.bins.shape or np.any(
        numerator.bins != denominator.bins
    ):
        raise ValueError("profiles cover different bins")
    zero = denominator.values == 0.0
    if zero.any():
        k = int(numerator.bins[np.nonzero(zero)[0][0]])
        raise ValueError(f"zero denominator at bin {k}")
    values = numerator.values / denominator.values
    band = np.abs(values) * np.sqrt(
        (numerator.band / numerator.values) ** 2
        + (denominator.band / denominator.values) ** 2
    )
    overnight_value = overnight_band = None
    if numerator.overnight_value is not None and denominator.overnight_value is not None:
        if denominator.overnight_value == 0.0:
            raise ValueError("zero denominator at overnight bin")
        overnight_value = numerator.overnight_value / denominator.overnight_value
        overnight_band = abs(overnight_value) * float(
            np.sqrt(
                (numerator.overnight_band / numerator.overnight_value) ** 2
                + (denominator.overnight_band / denominator.overnight_value) ** 2
            )
        )
    if statistic_name is None:
        statistic_name = f"{numerator.statistic_name}/{denominator.statistic_name}"
    return IntradayProfile(
        bins=numerator.bins.copy(),
        values=values,
        band=band,
        overnight_value=overnight_value,
        overnight_band=overnight_band,
        statistic_name=statistic_name,
        band_kind=numerator.band_kind,
    )


@dataclass(frozen=True)
class PowerLawFit:
    """Result of a log-log OLS fit of values ~ amplitude * bin**(-exponent)."""

    amplitude: float
    exponent: float
    fit_range: tuple[int, int]
    residual_rms: float
    exponent_stderr: float

    def predict(self, bins) -> np.ndarray:
        k = np.asarray(bins, dtype=np.float64)
        return self.amplitude * k ** (-self.exponent)


def first_half_range(bins_per_day: int) -> tuple[int, int]:
    """Bins 1 .. K // 2, the default fit window."""
    return (1, max(2, bins_per_day // 2))


def first_two_hours_range(
    bins_per_day: int, bins_per_hour: int = BINS_PER_HOUR_DEFAULT
) -> tuple[int, int]:
    """Bins for the first two trading hours (assumes five-minute bars by
    default); clipped to the day when K is small."""
    return (1, max(2, min(bins_per_day, 2 * bins_per_hour)))


def fit_power_law(
    profile: IntradayProfile, fit_range: tuple[int, int] | None = None
) -> PowerLawFit:
    """OLS fit of log(value) against log(bin) over an inclusive bin window.

    Requires strictly positive values on the window and at least 3 bins.
    The overnight point never participates.  ``exponent`` is the decay rate
    beta in value ~ A * k**(-beta); ``exponent_stderr`` is the classical
    OLS slope standard error and ``residual_rms`` the root-mean-square
    log-residual.
    """
    if fit_range is None:
        fit_range = first_half_range(int(profile.bins.max()))
    lo, hi = int(fit_range[0]), int(fit_range[1])
    if lo < 1 or hi <= lo:
        raise ValueError(f"bad fit range ({lo}, {hi})")
    mask = (profile.bins >= lo) & (profile.bins <= hi)
    k = profile.bins[mask].astype(np.float64)
    v = profile.values[mask]
    if k.size < 3:
        raise InsufficientDataError(
            f"fit range ({lo}, {hi}) covers {k.size} bins, need at least 3"
        )
    if np.any(v <= 0.0):
        bad = int(k[np.nonzero(v <= 0.0)[0][0]])
        raise ValueError(f"non-positive value at bin {bad}, log fit undefined")

    x = np.log(k)
    y = np.log(v)
    x_bar = x.mean()
    y_bar = y.mean()
    s_xx = float(((x - x_bar) ** 2).sum())
    slope = float(((x - x_bar) * (y - y_bar)).sum()) / s_xx
    intercept = y_bar - slope * x_bar
    resid = y - (intercept + slope * x)
    dof = k.size - 2
    s2 = float((resid**2).sum()) / dof if dof > 0 else 0.0
    return PowerLawFit(
        amplitude=float(np.exp(intercept)),
        exponent=-slope,
        fit_range=(lo, hi),
        residual_rms=float(np.sqrt((resid**2).mean())),
        exponent_stderr=float(np.sqrt(s2 / s_xx)),
    )
