"""Per-bin correlation spectra and eigen-subspace overlaps.

For a normalized panel, each bin k gets an equal-time correlation matrix
across stocks, estimated over days with per-stock centering (connected
moments) and population normalization.  Its eigen-decomposition is reported
with eigenvalues descending and a deterministic eigenvector sign convention
so repeated runs agree bit for bit.

The stability of eigenvectors across bins is measured by overlap matrices

    W_ij = v_i(reference bin) . v_j(k)

over a chosen eigenvector rank window (2..7 by default, the leading modes
below the market mode); singular values of W near one mean the subspace
persists through the day.  A Monte-Carlo baseline for unrelated random
subspaces calibrates how large those singular values would be by chance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cross_section import NormalizedPanel
from .errors import DegenerateSampleError, InsufficientDataError
from .panel import _PanelView

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class CorrelationMatrix:
    """Equal-time correlation across stocks for one bin."""

    entries: np.ndarray
    bin: int
    sample_count: int

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"correlation matrix must be square, got {arr.shape}")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class BinSpectrum:
    """Eigenvalues (descending) and sign-fixed eigenvectors for one bin."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]
    bin: int

    @property
    def n(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class MarketMode:
    lambda1_over_n: float
    v1_dot_e: float


@dataclass(frozen=True)
class OverlapResult:
    """Overlap of one bin's eigenvector window against the reference bin."""

    w: np.ndarray
    singular_values: np.ndarray  # descending
    bin: int
    reference_bin: int
    index_range: tuple[int, int]


def correlation_matrix(npanel: NormalizedPanel | _PanelView, k: int) -> CorrelationMatrix:
    """Correlation across stocks at bin ``k`` estimated over days.

    Per-stock means over days are removed and each row is scaled by its
    population std, so the diagonal is exactly one.  A stock with zero
    variance at this bin is an error naming the stock; fewer days than
    stocks only warns (the matrix is then rank-deficient but well defined).
    """
    data = npanel.returns[:, :, npanel.column_of(k)]
    n_stocks, n_days = data.shape
    if n_days < 2:
        raise InsufficientDataError("need at least 2 days for correlations")
    if n_days < n_stocks:
        warnings.warn(
            f"bin {k}: {n_days} days < {n_stocks} stocks, correlation matrix "
            "is rank-deficient",
            stacklevel=2,
        )
    centered = data - data.mean(axis=1, keepdims=True)
    scale = np.sqrt((centered**2).mean(axis=1))
    # constant rows must be caught exactly; mean subtraction can leave an
    # ulp-sized residue, so test the raw values, not the rounded scale
    flat = np.nonzero(np.all(data == data[:, :1], axis=1) | (scale == 0.0))[0]
    if flat.size:
        names = ", ".join(npanel.stock_ids[i] for i in flat[:5])
        raise DegenerateSampleError(
            f"zero variance at bin {k} for stock(s): {names}"
        )
    c = (centered @ centered.T) / n_days
    c /= np.outer(scale, scale)
    c = (c + c.T) / 2.0
    np.clip(c, -1.0, 1.0, out=c)
    np.fill_diagonal(c, 1.0)
    return CorrelationMatrix(entries=c, bin=int(k), sample_count=n_days)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so each sums positive; an exactly zero sum
    falls back to the first nonzero entry being positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        s = out[:, j].sum()
        if s < 0.0:
            out[:, j] = -out[:, j]
        elif s == 0.0:
            nz = np.nonzero(out[:, j])[0]
            if nz.size and out[nz[0], j] < 0.0:
                out[:, j] = -out[:, j]
    return out


def eigen_decompose(matrix: CorrelationMatrix) -> BinSpectrum:
    """Full eigen-decomposition, eigenvalues descending, signs fixed."""
    c = matrix.entries
    if np.max(np.abs(c - c.T)) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within tolerance")
    eigenvalues, eigenvectors = np.linalg.eigh(c)
    order = np.argsort(eigenvalues)[::-1]
    return BinSpectrum(
        eigenvalues=eigenvalues[order].copy(),
        eigenvectors=_fix_signs(eigenvectors[:, order]),
        bin=matrix.bin,
    )


def market_mode_stats(spectrum: BinSpectrum) -> MarketMode:
    """Top-eigenvalue share lambda_1/N and alignment of v_1 with the
    equal-weight direction e = (1, ..., 1)/sqrt(N)."""
    n = spectrum.n
    e = np.full(n, 1.0 / np.sqrt(n))
    return MarketMode(
        lambda1_over_n=float(spectrum.eigenvalues[0] / n),
        v1_dot_e=float(spectrum.eigenvectors[:, 0] @ e),
    )


def bin_spectra(
    npanel: NormalizedPanel | _PanelView, bins: Sequence[int] | None = None
) -> list[BinSpectrum]:
    """Eigen-decompose every requested bin (all panel bins by default)."""
    if bins is None:
        bins = [int(b) for b in npanel.bin_numbers]
    return [eigen_decompose(correlation_matrix(npanel, k)) for k in bins]


def overlap_singular_values(
    spectra: Sequence[BinSpectrum],
    reference_bin: int = 1,
    index_range: tuple[int, int] = (2, 7),
) -> list[OverlapResult]:
    """Overlap matrices of each bin's eigenvector window with the reference.

    ``index_range`` selects eigenvector ranks (1-based, rank 1 is the top
    mode) inclusively; the default (2, 7) tracks the six leading modes
    below the market mode.  Singular values come back descending in [0, 1]
    up to roundoff.
    """
    lo, hi = int(index_range[0]), int(index_range[1])
    if lo < 1 or hi < lo:
        raise ValueError(f"bad index range ({lo}, {hi})")
    by_bin = {s.bin: s for s in spectra}
    if reference_bin not in by_bin:
        raise ValueError(f"reference bin {reference_bin} not among spectra")
    ref = by_bin[reference_bin]
    if hi > ref.n:
        raise ValueError(f"index range ({lo}, {hi}) exceeds dimension {ref.n}")
    cols = slice(lo - 1, hi)
    ref_block = ref.eigenvectors[:, cols]
    out = []
    for spectrum in spectra:
        if spectrum.n != ref.n:
            raise ValueError("spectra have mismatched dimensions")
        w = ref_block.T @ spectrum.eigenvectors[:, cols]
        singular = np.linalg.svd(w, compute_uv=False)
        out.append(
            OverlapResult(
                w=w,
                singular_values=singular,
                bin=spectrum.bin,
                reference_bin=reference_bin,
                index_range=(lo, hi),
            )
        )
    return out


def random_overlap_baseline(
    dim: int,
    subspace_dim: int,
    trials: int = 10000,
    quantile: float = 0.99,
    seed: int = 0,
) -> float:
    """Upper quantile of the largest overlap singular value between two
    independent random orthonormal frames in ``dim`` dimensions.

    Each trial draws two Gaussian ``dim x subspace_dim`` frames,
    orthonormalizes them, and records the largest singular value of their
    overlap.  Trials use independent substreams spawned from ``seed``, so
    the result does not depend on evaluation order.  At least 1000 trials
    are required for a stable tail estimate.
    """
    if subspace_dim >= dim:
        raise ValueError(f"subspace dimension {subspace_dim} must be < {dim}")
    if subspace_dim < 1:
        raise ValueError("subspace dimension must be >= 1")
    if trials < 1000:
        raise ValueError(f"need at least 1000 trials, got {trials}")
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must be inside (0, 1)")
    streams = np.random.SeedSequence(seed).spawn(trials)
    largest = np.empty(trials)
    for i, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        q1, _ = np.linalg.qr(rng.standard_normal((dim, subspace_dim)))
        q2, _ = np.linalg.qr(rng.standard_normal((dim, subspace_dim)))
        largest[i] = np.linalg.svd(q1.T @ q2, compute_uv=False)[0]
    return float(np.quantile(largest, quantile))
