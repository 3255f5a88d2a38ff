"""Cross-sectional dispersion statistics and panel normalization.

For each (bin k, day t) the cross-section of returns over stocks yields

    mu_d    = equiweighted index return (cross-sectional mean),
    sigma_d = cross-sectional population std (dispersion),
    zeta_d  = 6 (mu_d - m_d) / sigma_d          (m_d the cross-sectional median),
    kappa_d = 24 (1 - sqrt(pi/2) <|r - mu_d|> / sigma_d),

i.e. the same low-moment kernels as the single-stock statistics, applied
across stocks instead of across days.  kappa_d carries no zeta^2 term.

Normalizing each cell by its own sigma_d produces a panel whose
cross-sectional variance is exactly one at every (bin, day), which is the
input the correlation-spectrum machinery expects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCrossSectionError, InsufficientDataError
from .panel import ReturnPanel, _PanelView
from .robust_moments import grid_moments


@dataclass(frozen=True)
class DispersionSet:
    """Cross-sectional moments of one (bin, day) cell; shape statistics are
    None when every stock printed the same return."""

    index_return: float
    dispersion: float
    skewness: float | None
    kurtosis: float | None
    median: float
    bin: int
    day: int

    @property
    def degenerate(self) -> bool:
        return self.skewness is None


@dataclass(frozen=True)
class DispersionGrid:
    """Dispersion moments for every (bin, day); arrays are (n_bins, n_days)
    with rows aligned to ``bin_numbers``."""

    index_return: np.ndarray
    dispersion: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    median: np.ndarray
    mad: np.ndarray
    degenerate: np.ndarray
    bin_numbers: np.ndarray
    n_stocks: int
    dates: tuple

    def row_of(self, bin_number: int) -> int:
        rows = list(self.bin_numbers)
        if bin_number not in rows:
            raise ValueError(f"bin {bin_number} not in grid")
        return rows.index(bin_number)

    def at(self, bin_number: int, day: int) -> DispersionSet:
        r = self.row_of(bin_number)
        if self.degenerate[r, day]:
            return DispersionSet(
                float(self.index_return[r, day]),
                0.0,
                None,
                None,
                float(self.median[r, day]),
                bin_number,
                day,
            )
        return DispersionSet(
            float(self.index_return[r, day]),
            float(self.dispersion[r, day]),
            float(self.skewness[r, day]),
            float(self.kurtosis[r, day]),
            float(self.median[r, day]),
            bin_number,
            day,
        )

    def pooled(
        self, include_overnight: bool = False, bins=None, drop_degenerate: bool = True
    ) -> dict[str, np.ndarray]:
        """Flatten selected bins into 1-D arrays for conditioning.

        ``bins`` restricts to specific bin numbers; by default all intraday
        bins pool together and the overnight row stays out.
        """
        labels = np.asarray(self.bin_numbers)
        keep = np.ones(labels.size, dtype=bool)
        if not include_overnight:
            keep &= labels != 0
        if bins is not None:
            keep &= np.isin(labels, np.asarray(list(bins)))
        if not keep.any():
            raise ValueError("bin selection leaves no rows")
        if drop_degenerate:
            mask = ~self.degenerate[keep]
        else:
            mask = np.ones_like(self.degenerate[keep], dtype=bool)
        return {
            "index_return": self.index_return[keep][mask],
            "dispersion": self.dispersion[keep][mask],
            "skewness": self.skewness[keep][mask],
            "kurtosis": self.kurtosis[keep][mask],
            "median": self.median[keep][mask],
            "mad": self.mad[keep][mask],
        }


def dispersion_grid(panel: ReturnPanel | _PanelView) -> DispersionGrid:
    """Cross-sectional moments for every (bin, day) cell of a panel."""
    if panel.n_stocks < 2:
        raise InsufficientDataError("cross-sections need at least 2 stocks")
    mean, vol, skew, kurt, median, mad, degenerate = grid_moments(panel.returns, axis=0)
    # grid axes arrive as (day, bin); present them bin-major.
    return DispersionGrid(
        index_return=mean.T.copy(),
        dispersion=vol.T.copy(),
        skewness=skew.T.copy(),
        kurtosis=kurt.T.copy(),
        median=median.T.copy(),
        mad=mad.T.copy(),
        degenerate=degenerate.T.copy(),
        bin_numbers=panel.bin_numbers,
        n_stocks=panel.n_stocks,
        dates=tuple(panel.dates),
    )


def dispersion_moments(panel: ReturnPanel | _PanelView, k: int, t: int) -> DispersionSet:
    """Cross-sectional moments of one (bin, day) cell."""
    if panel.n_stocks < 2:
        raise InsufficientDataError("cross-sections need at least 2 stocks")
    if not 0 <= t < panel.n_days:
        raise ValueError(f"day index {t} out of range")
    column = panel.returns[:, t, panel.column_of(k)]
    mean, vol, skew, kurt, median, _, degenerate = grid_moments(column, axis=0)
    if degenerate:
        return DispersionSet(float(mean), 0.0, None, None, float(median), k, t)
    return DispersionSet(
        float(mean), float(vol), float(skew), float(kurt), float(median), k, t
    )


def dispersion_mad(panel: ReturnPanel | _PanelView, k: int, t: int) -> float:
    """Cross-sectional mean absolute deviation about mu_d for one cell."""
    if panel.n_stocks < 2:
        raise InsufficientDataError("cross-sections need at least 2 stocks")
    if not 0 <= t < panel.n_days:
        raise ValueError(f"day index {t} out of range")
    column = panel.returns[:, t, panel.column_of(k)]
    return float(np.abs(column - column.mean()).mean())


@dataclass(frozen=True)
class NormalizedPanel(_PanelView):
    """Panel of returns scaled by their own cross-sectional dispersion.

    Every (bin, day) cross-section has population variance exactly one.
    ``source`` keeps the originating panel reachable.
    """

    returns: np.ndarray
    stock_ids: tuple[str, ...]
    dates: tuple
    bins_per_day: int
    overnight_present: bool
    source: ReturnPanel

    def __post_init__(self):
        arr = np.asarray(self.returns, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "returns", arr)


def normalize_panel(panel: ReturnPanel) -> NormalizedPanel:
    """Divide each (bin, day) cell by its cross-sectional dispersion.

    Raises :class:`DegenerateCrossSectionError` listing every zero-dispersion
    (bin, day) pair; nothing is silently passed through.
    """
    grid = dispersion_grid(panel)
    if grid.degenerate.any():
        rows, cols = np.nonzero(grid.degenerate)
        pairs = [(int(grid.bin_numbers[r]), int(t)) for r, t in zip(rows, cols)]
        raise DegenerateCrossSectionError(pairs)
    # dispersion rows are (bin, day); panel axes are (stock, day, bin).
    scale = grid.dispersion.T[None, :, :]
    return NormalizedPanel(
        returns=panel.returns / scale,
        stock_ids=panel.stock_ids,
        dates=panel.dates,
        bins_per_day=panel.bins_per_day,
        overnight_present=panel.overnight_present,
        source=panel,
    )
