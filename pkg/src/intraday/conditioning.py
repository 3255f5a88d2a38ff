"""Index-conditioned statistics over pooled (bin, day) cells.

Conditioning works on (x, y) pairs bucketed by x: each bucket reports the
mean of y, its standard error, and the pair count.  Buckets below a
minimum count are omitted and tallied.  The default grid spans index
returns of -3% to +3% in 0.10% steps, pooling all intraday (bin, day)
cells; the overnight bin stays out unless asked for.

Helpers split a curve into odd and even parts about x = 0 and diagnose
sub-linear growth: a straight line is fitted to the buckets nearest the
origin on each sign branch and extrapolated outward; observed means
falling below the line (beyond one combined standard error everywhere)
mean the statistic grows sub-linearly with |x|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cross_section import DispersionGrid
from .errors import InsufficientDataError

DEFAULT_BUCKET_WIDTH = 0.001
DEFAULT_BUCKET_LO = -0.03
DEFAULT_BUCKET_HI = 0.03
DEFAULT_MIN_COUNT = 50
DISPERSION_KINDS = ("std", "mad")


@dataclass(frozen=True)
class BucketSpec:
    """Contiguous bucket edges over the conditioning variable."""

    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("need at least 2 bucket edges")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("bucket edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def fixed_width(
        cls,
        width: float = DEFAULT_BUCKET_WIDTH,
        lo: float = DEFAULT_BUCKET_LO,
        hi: float = DEFAULT_BUCKET_HI,
    ) -> "BucketSpec":
        if width <= 0:
            raise ValueError("bucket width must be positive")
        if hi <= lo:
            raise ValueError("bucket range must have hi > lo")
        n = int(round((hi - lo) / width))
        if not np.isclose(lo + n * width, hi, rtol=0, atol=1e-12 * max(1.0, abs(hi))):
            raise ValueError("bucket range is not a whole number of widths")
        return cls(edges=lo + width * np.arange(n + 1))

    @classmethod
    def from_edges(cls, edges) -> "BucketSpec":
        return cls(edges=np.asarray(list(edges), dtype=np.float64))

    @property
    def centers(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2.0

    @property
    def n_buckets(self) -> int:
        return self.edges.size - 1


@dataclass(frozen=True)
class ConditionalCurve:
    """Bucketed conditional means of y given x."""

    bucket_centers: np.ndarray
    means: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    conditioning_name: str
    statistic_name: str
    omitted_buckets: int


def conditional_statistic(
    x,
    y,
    buckets: BucketSpec | None = None,
    min_count: int = DEFAULT_MIN_COUNT,
    conditioning_name: str = "x",
    statistic_name: str = "y",
) -> ConditionalCurve:
    """Bucket y by x and report per-bucket mean, stderr and count.

    Pairs outside the edge span are ignored.  Buckets with fewer than
    ``min_count`` pairs are omitted from the curve and counted in
    ``omitted_buckets`` (empty buckets included).  stderr is the population
    std over the bucket divided by sqrt(count).
    """
    if buckets is None:
        buckets = BucketSpec.fixed_width()
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"x and y sizes differ ({x.size} vs {y.size})")
    if x.size == 0:
        raise InsufficientDataError("no pairs to condition")

    edges = buckets.edges
    centers_all = buckets.centers
    idx = np.searchsorted(edges, x, side="right") - 1
    # fold the closing edge into the last bucket
    idx[x == edges[-1]] = buckets.n_buckets - 1
    in_span = (idx >= 0) & (idx < buckets.n_buckets)

    centers, means, stderrs, counts = [], [], [], []
    omitted = 0
    for b in range(buckets.n_buckets):
        sel = in_span & (idx == b)
        n = int(sel.sum())
        if n < min_count:
            omitted += 1
            continue
        vals = y[sel]
        centers.append(centers_all[b])
        means.append(vals.mean())
        stderrs.append(vals.std() / np.sqrt(n))
        counts.append(n)
    return ConditionalCurve(
        bucket_centers=np.asarray(centers),
        means=np.asarray(means),
        stderr=np.asarray(stderrs),
        counts=np.asarray(counts, dtype=int),
        conditioning_name=conditioning_name,
        statistic_name=statistic_name,
        omitted_buckets=omitted,
    )


def _pooled(grid: DispersionGrid, include_overnight: bool, bins):
    return grid.pooled(include_overnight=include_overnight, bins=bins)


def dispersion_vs_index(
    grid: DispersionGrid,
    buckets: BucketSpec | None = None,
    min_count: int = DEFAULT_MIN_COUNT,
    include_overnight: bool = False,
    bins=None,
) -> ConditionalCurve:
    """sigma_d conditioned on the index return mu_d, pooled over (bin, day)."""
    pool = _pooled(grid, include_overnight, bins)
    return conditional_statistic(
        pool["index_return"],
        pool["dispersion"],
        buckets,
        min_count,
        conditioning_name="index_return",
        statistic_name="dispersion",
    )


def skew_vs_index(
    grid: DispersionGrid,
    buckets: BucketSpec | None = None,
    min_count: int = DEFAULT_MIN_COUNT,
    include_overnight: bool = False,
    bins=None,
) -> ConditionalCurve:
    """zeta_d conditioned on the index return mu_d."""
    pool = _pooled(grid, include_overnight, bins)
    return conditional_statistic(
        pool["index_return"],
        pool["skewness"],
        buckets,
        min_count,
        conditioning_name="index_return",
        statistic_name="skewness",
    )


def kurtosis_vs_index(
    grid: DispersionGrid,
    buckets: BucketSpec | None = None,
    min_count: int = DEFAULT_MIN_COUNT,
    include_overnight: bool = False,
    bins=None,
    absolute_index: bool = False,
) -> ConditionalCurve:
    """kappa_d conditioned on mu_d, or on |mu_d| with ``absolute_index``."""
    pool = _pooled(grid, include_overnight, bins)
    x = pool["index_return"]
    name = "index_return"
    if absolute_index:
        x = np.abs(x)
        name = "abs_index_return"
    return conditional_statistic(
        x,
        pool["kurtosis"],
        buckets,
        min_count,
        conditioning_name=name,
        statistic_name="kurtosis",
    )


def kurtosis_vs_dispersion(
    grid: DispersionGrid,
    buckets: BucketSpec | None = None,
    min_count: int = DEFAULT_MIN_COUNT,
    include_overnight: bool = False,
    bins=None,
    dispersion_kind: str = "std",
) -> ConditionalCurve:
    """kappa_d conditioned on the dispersion, measured as std or MAD."""
    if dispersion_kind not in DISPERSION_KINDS:
        raise ValueError(
            f"unknown dispersion kind {dispersion_kind!r}, expected {DISPERSION_KINDS}"
        )
    pool = _pooled(grid, include_overnight, bins)
    x = pool["dispersion"] if dispersion_kind == "std" else pool["mad"]
    return conditional_statistic(
        x,
        pool["kurtosis"],
        buckets,
        min_count,
        conditioning_name=f"dispersion_{dispersion_kind}",
        statistic_name="kurtosis",
    )


def odd_even_decompose(
    curve: ConditionalCurve, center_tol: float = 1e-9
) -> tuple[ConditionalCurve, ConditionalCurve]:
    """Split a curve into odd and even parts about x = 0.

    Buckets at +c and -c pair up (|c| within ``center_tol``); both parts
    live on the non-negative centers.  odd = (f(c) - f(-c)) / 2,
    even = (f(c) + f(-c)) / 2, with errors combined in quadrature.  A
    bucket whose mirror is missing is an error listing the offenders.
    """
    c = curve.bucket_centers
    pos = np.nonzero(c > center_tol)[0]
    neg = np.nonzero(c < -center_tol)[0]
    zero = np.nonzero(np.abs(c) <= center_tol)[0]

    neg_by_center = {float(-c[i]): i for i in neg}
    unpaired = []
    pairs = []
    for i in pos:
        target = float(c[i])
        match = None
        for cx, j in neg_by_center.items():
            if abs(cx - target) <= center_tol:
                match = j
                break
        if match is None:
            unpaired.append(target)
        else:
            pairs.append((i, match))
    matched_neg = {j for _, j in pairs}
    unpaired.extend(float(c[j]) for j in neg if j not in matched_neg)
    if unpaired:
        shown = ", ".join(f"{u:+.6g}" for u in sorted(unpaired)[:8])
        raise ValueError(f"buckets without a mirror partner at {shown}")

    centers, odd_m, odd_s, even_m, even_s, counts = [], [], [], [], [], []
    for j in zero:
        centers.append(0.0)
        odd_m.append(0.0)
        odd_s.append(0.0)
        even_m.append(curve.means[j])
        even_s.append(curve.stderr[j])
        counts.append(curve.counts[j])
    for i, j in sorted(pairs, key=lambda p: c[p[0]]):
        centers.append(float(c[i]))
        combined = float(np.hypot(curve.stderr[i], curve.stderr[j]) / 2.0)
        odd_m.append((curve.means[i] - curve.means[j]) / 2.0)
        odd_s.append(combined)
        even_m.append((curve.means[i] + curve.means[j]) / 2.0)
        even_s.append(combined)
        counts.append(int(curve.counts[i] + curve.counts[j]))

    def build(means, errs, tag):
        return ConditionalCurve(
            bucket_centers=np.asarray(centers),
            means=np.asarray(means),
            stderr=np.asarray(errs),
            counts=np.asarray(counts, dtype=int),
            conditioning_name=curve.conditioning_name,
            statistic_name=f"{tag}[{curve.statistic_name}]",
            omitted_buckets=curve.omitted_buckets,
        )

    return build(odd_m, odd_s, "odd"), build(even_m, even_s, "even")


@dataclass(frozen=True)
class BranchDiagnostic:
    """Origin-line extrapolation on one sign branch of a curve."""

    sign: int
    slope: float
    intercept: float
    centers: np.ndarray
    deviations: np.ndarray
    stderr: np.ndarray
    sub_linear: bool


@dataclass(frozen=True)
class SublinearityReport:
    origin_window: int
    branches: tuple[BranchDiagnostic, ...]
    sub_linear: bool


def sublinearity_diagnostic(
    curve: ConditionalCurve, origin_window: int = 3
) -> SublinearityReport:
    """Test whether a curve grows sub-linearly in |x| on both branches.

    On each sign branch the ``origin_window`` buckets nearest x = 0 fix a
    straight line (plain OLS); the remaining buckets are compared against
    its extrapolation.  A branch is sub-linear when every outer deviation
    (observed - line) is negative by more than one combined standard error;
    the overall verdict requires both branches.  The combined error adds the
    bucket stderr and the line's prediction error in quadrature.
    """
    if origin_window < 2:
        raise ValueError("origin_window must be >= 2")
    c = curve.bucket_centers
    branches = []
    for sign in (+1, -1):
        on_branch = np.nonzero(np.sign(c) == sign)[0]
        if on_branch.size < origin_window + 1:
            raise InsufficientDataError(
                f"branch {sign:+d} has {on_branch.size} buckets, "
                f"need at least {origin_window + 1}"
            )
        order = on_branch[np.argsort(np.abs(c[on_branch]))]
        window = order[:origin_window]
        outer = order[origin_window:]

        xw = c[window]
        yw = curve.means[window]
        x_bar = xw.mean()
        y_bar = yw.mean()
        s_xx = float(((xw - x_bar) ** 2).sum())
        slope = float(((xw - x_bar) * (yw - y_bar)).sum()) / s_xx
        intercept = y_bar - slope * x_bar
        resid = yw - (intercept + slope * xw)
        dof = xw.size - 2
        s2 = float((resid**2).sum()) / dof if dof > 0 else 0.0

        xo = c[outer]
        predicted = intercept + slope * xo
        deviations = curve.means[outer] - predicted
        pred_var = s2 * (1.0 / xw.size + (xo - x_bar) ** 2 / s_xx)
        combined = np.sqrt(curve.stderr[outer] ** 2 + pred_var)
        ok = bool(np.all(deviations < -combined))
        branches.append(
            BranchDiagnostic(
                sign=sign,
                slope=slope,
                intercept=intercept,
                centers=xo.copy(),
                deviations=deviations,
                stderr=combined,
                sub_linear=ok,
            )
        )
    return SublinearityReport(
        origin_window=origin_window,
        branches=tuple(branches),
        sub_linear=all(b.sub_linear for b in branches),
    )
