"""Command-line interface: staged pipeline over bar-return panels.

Subcommands map to pipeline stages, each reading the previous stage's
files from the output directory, so ``run`` and a manual stage sequence
produce byte-identical tables:

    synth          manifest -> returns.csv, manifest_echo.txt
    ingest         input -> returns_canonical.csv, load_report.txt, validation.txt
    moments        -> stock_moments.csv
    cross-section  -> dispersion.csv, fig1.csv, fig2.csv
    fit            -> fig1_fit.csv
    spectra        -> fig6.csv, fig7.csv, fig7_null.csv
    condition      -> fig3.csv, fig4.csv, fig5_index.csv, fig5_dispersion.csv
    run            all of the above in order, plus run_manifest.txt

Exit codes: 0 success, 2 input error, 3 schema error, 4 numeric error,
5 internal error.  Failures print one machine-parsable line to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .conditioning import (
    BucketSpec,
    dispersion_vs_index,
    kurtosis_vs_dispersion,
    kurtosis_vs_index,
    skew_vs_index,
)
from .config import (
    RunConfig,
    config_echo_pairs,
    read_run_config,
    thread_cap_from_env,
    write_kv_lines,
)
from .cross_section import dispersion_grid, normalize_panel
from .errors import (
    DegenerateSampleError,
    FeasibilityError,
    InsufficientDataError,
    IntradayError,
    SchemaError,
)
from .panel import (
    load_panel,
    read_return_records,
    returns_from_prices,
    validate_panel,
    write_return_records,
    panel_to_records,
)
from .robust_moments import stock_bin_moments
from .seasonality import (
    IntradayProfile,
    fit_power_law,
    profile_over_days,
    profile_over_stocks,
    ratio_profile,
)
from .spectral import (
    bin_spectra,
    market_mode_stats,
    overlap_singular_values,
    random_overlap_baseline,
)
from .synth import generate_market, read_manifest, write_manifest
from .tableio import column, read_table, write_table

RETURNS_FILE = "returns.csv"
CANONICAL_FILE = "returns_canonical.csv"


def _out(config: RunConfig, name: str) -> str:
    return os.path.join(config.output_dir, name)


def _load_canonical(config: RunConfig):
    panel, _ = load_panel(_out(config, CANONICAL_FILE), policy="strict")
    return panel


def stage_synth(config: RunConfig) -> None:
    manifest = read_manifest(config.synth_manifest)
    panel, echoed = generate_market(manifest)
    os.makedirs(config.output_dir, exist_ok=True)
    write_return_records(panel_to_records(panel), _out(config, RETURNS_FILE))
    write_manifest(echoed, _out(config, "manifest_echo.txt"))


def stage_ingest(config: RunConfig) -> None:
    os.makedirs(config.output_dir, exist_ok=True)
    if config.mode == "synth":
        records = read_return_records(_out(config, RETURNS_FILE))
    elif config.mode == "prices":
        records = returns_from_prices(config.input, config.price_convention)
    else:
        records = read_return_records(config.input)
    panel, report = load_panel(records, policy=config.policy)
    validation = validate_panel(panel, sanity_bound=config.sanity_bound)
    write_return_records(panel_to_records(panel), _out(config, CANONICAL_FILE))
    with open(_out(config, "load_report.txt"), "w", encoding="utf-8") as handle:
        handle.write("\n".join(report.lines()) + "\n")
    with open(_out(config, "validation.txt"), "w", encoding="utf-8") as handle:
        handle.write("\n".join(validation.lines()) + "\n")


def stage_moments(config: RunConfig) -> None:
    panel = _load_canonical(config)
    grid = stock_bin_moments(panel)
    rows = []
    for a, symbol in enumerate(grid.stock_ids):
        for c, bin_number in enumerate(grid.bin_numbers):
            rows.append(
                [
                    symbol,
                    int(bin_number),
                    1 if bin_number == 0 else 0,
                    float(grid.mean[a, c]),
                    float(grid.volatility[a, c]),
                    float(grid.skewness[a, c]),
                    float(grid.kurtosis[a, c]),
                    float(grid.median[a, c]),
                    1 if grid.degenerate[a, c] else 0,
                ]
            )
    write_table(
        _out(config, "stock_moments.csv"),
        [
            "symbol",
            "bin",
            "overnight",
            "mean",
            "volatility",
            "skewness",
            "kurtosis",
            "median",
            "degenerate",
        ],
        rows,
    )


def _profile_rows(profiles: list[IntradayProfile]) -> list[list]:
    """Rows (bin, overnight, value, band, value, band, ...) for fig tables."""
    rows = []
    if profiles[0].overnight_value is not None:
        row: list = [0, 1]
        for p in profiles:
            row.extend([p.overnight_value, p.overnight_band])
        rows.append(row)
    for i, bin_number in enumerate(profiles[0].bins):
        row = [int(bin_number), 0]
        for p in profiles:
            row.extend([float(p.values[i]), float(p.band[i])])
        rows.append(row)
    return rows


def _moment_profile_from_table(config: RunConfig, field: str, band_kind: str):
    header, raw = read_table(
        _out(config, "stock_moments.csv"), expect_columns=["symbol", "bin", field]
    )
    symbols = column(header, raw, "symbol", str)
    bins = column(header, raw, "bin", int)
    values = column(header, raw, field, float)
    order_syms = sorted(set(symbols))
    order_bins = sorted(set(bins))
    table = np.full((len(order_syms), len(order_bins)), np.nan)
    s_index = {s: i for i, s in enumerate(order_syms)}
    b_index = {b: i for i, b in enumerate(order_bins)}
    for sym, b, v in zip(symbols, bins, values):
        table[s_index[sym], b_index[b]] = v
    return profile_over_stocks(
        table, band_kind=band_kind, bin_numbers=order_bins, statistic_name=field
    )


def stage_cross_section(config: RunConfig) -> None:
    panel = _load_canonical(config)
    grid = dispersion_grid(panel)

    rows = []
    for t, date in enumerate(grid.dates):
        for r, bin_number in enumerate(grid.bin_numbers):
            rows.append(
                [
                    date.isoformat(),
                    int(bin_number),
                    1 if bin_number == 0 else 0,
                    float(grid.index_return[r, t]),
                    float(grid.dispersion[r, t]),
                    float(grid.skewness[r, t]),
                    float(grid.kurtosis[r, t]),
                    float(grid.median[r, t]),
                    float(grid.mad[r, t]),
                    1 if grid.degenerate[r, t] else 0,
                ]
            )
    write_table(
        _out(config, "dispersion.csv"),
        [
            "date",
            "bin",
            "overnight",
            "index_return",
            "dispersion",
            "skewness",
            "kurtosis",
            "median",
            "mad",
            "degenerate",
        ],
        rows,
    )

    stock_vol = _moment_profile_from_table(config, "volatility", "stderr")
    dispersion_profile = profile_over_days(
        grid.dispersion, "stderr", grid.bin_numbers, "dispersion"
    )
    abs_index = profile_over_days(
        np.abs(grid.index_return), "stderr", grid.bin_numbers, "abs_index_return"
    )
    ratio = ratio_profile(stock_vol, dispersion_profile, "vol_dispersion_ratio")
    write_table(
        _out(config, "fig1.csv"),
        [
            "bin",
            "overnight",
            "stock_vol",
            "stock_vol_band",
            "dispersion",
            "dispersion_band",
            "abs_index_return",
            "abs_index_return_band",
            "vol_dispersion_ratio",
            "vol_dispersion_ratio_band",
        ],
        _profile_rows([stock_vol, dispersion_profile, abs_index, ratio]),
    )

    stock_kurt = _moment_profile_from_table(config, "kurtosis", "dispersion")
    dispersion_kurt = profile_over_days(
        grid.kurtosis, "dispersion", grid.bin_numbers, "dispersion_kurtosis"
    )
    write_table(
        _out(config, "fig2.csv"),
        [
            "bin",
            "overnight",
            "stock_kurtosis",
            "stock_kurtosis_band",
            "dispersion_kurtosis",
            "dispersion_kurtosis_band",
        ],
        _profile_rows([stock_kurt, dispersion_kurt]),
    )


def stage_fit(config: RunConfig) -> None:
    header, raw = read_table(
        _out(config, "fig1.csv"), expect_columns=["bin", "overnight", "stock_vol"]
    )
    bins = np.asarray(column(header, raw, "bin", int))
    overnight = np.asarray(column(header, raw, "overnight", int))
    values = np.asarray(column(header, raw, "stock_vol", float))
    bands = np.asarray(column(header, raw, "stock_vol_band", float))
    keep = overnight == 0
    profile = IntradayProfile(
        bins=bins[keep],
        values=values[keep],
        band=bands[keep],
        overnight_value=None,
        overnight_band=None,
        statistic_name="stock_vol",
        band_kind="stderr",
    )
    fit = fit_power_law(profile, config.fit_range_for(int(bins[keep].max())))
    write_table(
        _out(config, "fig1_fit.csv"),
        [
            "amplitude",
            "exponent",
            "fit_lo",
            "fit_hi",
            "residual_rms",
            "exponent_stderr",
        ],
        [
            [
                fit.amplitude,
                fit.exponent,
                fit.fit_range[0],
                fit.fit_range[1],
                fit.residual_rms,
                fit.exponent_stderr,
            ]
        ],
    )


def stage_spectra(config: RunConfig) -> None:
    panel = _load_canonical(config)
    npanel = normalize_panel(panel)
    spectra = bin_spectra(npanel)

    fig6_rows = []
    for spectrum in spectra:
        mm = market_mode_stats(spectrum)
        fig6_rows.append(
            [
                spectrum.bin,
                1 if spectrum.bin == 0 else 0,
                mm.lambda1_over_n,
                mm.v1_dot_e,
            ]
        )
    write_table(
        _out(config, "fig6.csv"),
        ["bin", "overnight", "lambda1_over_n", "v1_dot_e"],
        fig6_rows,
    )

    lo, hi = config.eigen_lo, config.eigen_hi
    overlaps = overlap_singular_values(
        spectra, reference_bin=config.reference_bin, index_range=(lo, hi)
    )
    by_bin = {s.bin: s for s in spectra}
    header = ["bin", "overnight"]
    header += [f"lambda_{i}" for i in range(lo, hi + 1)]
    header += [f"s_{i}" for i in range(lo, hi + 1)]
    fig7_rows = []
    for result in overlaps:
        spectrum = by_bin[result.bin]
        row = [result.bin, 1 if result.bin == 0 else 0]
        row += [float(v) for v in spectrum.eigenvalues[lo - 1 : hi]]
        row += [float(v) for v in result.singular_values]
        fig7_rows.append(row)
    write_table(_out(config, "fig7.csv"), header, fig7_rows)

    threshold = random_overlap_baseline(
        dim=panel.n_stocks,
        subspace_dim=hi - lo + 1,
        trials=config.null_trials,
        quantile=config.null_quantile,
        seed=config.null_seed,
    )
    write_table(
        _out(config, "fig7_null.csv"),
        ["dim", "subspace_dim", "trials", "quantile", "seed", "threshold"],
        [
            [
                panel.n_stocks,
                hi - lo + 1,
                config.null_trials,
                config.null_quantile,
                config.null_seed,
                threshold,
            ]
        ],
    )


def _write_curve(config: RunConfig, name: str, curve) -> None:
    write_table(
        _out(config, name),
        ["bucket_center", "mean", "stderr", "count"],
        [
            [float(c), float(m), float(s), int(n)]
            for c, m, s, n in zip(
                curve.bucket_centers, curve.means, curve.stderr, curve.counts
            )
        ],
    )


def stage_condition(config: RunConfig) -> None:
    panel = _load_canonical(config)
    grid = dispersion_grid(panel)
    signed = BucketSpec.fixed_width(
        config.bucket_width, config.bucket_lo, config.bucket_hi
    )
    positive = BucketSpec.fixed_width(config.bucket_width, 0.0, config.bucket_hi)
    common = dict(
        min_count=config.min_count,
        include_overnight=config.include_overnight_conditioning,
        bins=config.condition_bins,
    )
    _write_curve(
        config, "fig3.csv", dispersion_vs_index(grid, signed, **common)
    )
    _write_curve(config, "fig4.csv", skew_vs_index(grid, signed, **common))
    _write_curve(
        config, "fig5_index.csv", kurtosis_vs_index(grid, signed, **common)
    )
    _write_curve(
        config,
        "fig5_dispersion.csv",
        kurtosis_vs_dispersion(grid, positive, dispersion_kind="std", **common),
    )


def run_pipeline(config: RunConfig) -> None:
    """Execute every stage in order and write the run manifest."""
    if config.mode == "synth":
        stage_synth(config)
    stage_ingest(config)
    stage_moments(config)
    stage_cross_section(config)
    stage_fit(config)
    stage_spectra(config)
    stage_condition(config)
    pairs = [
        ("package_version", __version__),
        ("table_schema_version", "1"),
    ]
    pairs.extend(config_echo_pairs(config))
    write_kv_lines(pairs, _out(config, "run_manifest.txt"))


_STAGES = {
    "run": run_pipeline,
    "synth": stage_synth,
    "ingest": stage_ingest,
    "moments": stage_moments,
    "cross-section": stage_cross_section,
    "fit": stage_fit,
    "spectra": stage_spectra,
    "condition": stage_condition,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intraday",
        description="Intraday seasonality statistics over bar-return panels",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _STAGES:
        p = sub.add_parser(name)
        p.add_argument("--config", "-c", help="run config file (key = value)")
        p.add_argument("--mode", choices=("synth", "returns", "prices"))
        p.add_argument("--input")
        p.add_argument("--synth-manifest")
        p.add_argument("--output-dir")
        p.add_argument("--policy", choices=("strict", "drop-incomplete", "zero-fill"))
        p.add_argument("--price-convention", choices=("close_to_close", "bin_open"))
        p.add_argument("--fit-window")
        p.add_argument("--bucket-width", type=float)
        p.add_argument("--bucket-lo", type=float)
        p.add_argument("--bucket-hi", type=float)
        p.add_argument("--min-count", type=int)
        p.add_argument("--eigen-lo", type=int)
        p.add_argument("--eigen-hi", type=int)
        p.add_argument("--reference-bin", type=int)
        p.add_argument("--null-trials", type=int)
        p.add_argument("--null-quantile", type=float)
        p.add_argument("--null-seed", type=int)
        p.add_argument("--sanity-bound", type=float)
        p.add_argument(
            "--include-overnight-conditioning", choices=("true", "false")
        )
        p.add_argument("--condition-bins", help="comma-separated bin numbers")
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = read_run_config(args.config) if args.config else RunConfig()
    overrides = {
        "mode": args.mode,
        "input": args.input,
        "synth_manifest": args.synth_manifest,
        "output_dir": args.output_dir,
        "policy": args.policy,
        "price_convention": args.price_convention,
        "fit_window": args.fit_window,
        "bucket_width": args.bucket_width,
        "bucket_lo": args.bucket_lo,
        "bucket_hi": args.bucket_hi,
        "min_count": args.min_count,
        "eigen_lo": args.eigen_lo,
        "eigen_hi": args.eigen_hi,
        "reference_bin": args.reference_bin,
        "null_trials": args.null_trials,
        "null_quantile": args.null_quantile,
        "null_seed": args.null_seed,
        "sanity_bound": args.sanity_bound,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.include_overnight_conditioning is not None:
        config.include_overnight_conditioning = (
            args.include_overnight_conditioning == "true"
        )
    if args.condition_bins is not None:
        bins = tuple(int(p) for p in args.condition_bins.split(",") if p.strip())
        config.condition_bins = bins or None
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        thread_cap_from_env()
        config = _resolve_config(args)
    except (IntradayError, ValueError, OSError) as exc:
        print(f"error: input-error: {exc}", file=sys.stderr)
        return 2
    try:
        _STAGES[args.command](config)
    except SchemaError as exc:
        print(f"error: schema-error: {exc}", file=sys.stderr)
        return 3
    except (
        DegenerateSampleError,
        InsufficientDataError,
        FeasibilityError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"error: numeric-error: {exc}", file=sys.stderr)
        return 4
    except (IntradayError, FileNotFoundError) as exc:
        print(f"error: input-error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: internal-error: {exc}", file=sys.stderr)
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
