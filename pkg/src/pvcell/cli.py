"""Command-line surface: simulate, fit, scale, export.

Datasets travel as CSV with one leading '#' JSON header line (or as plain
JSON); every output embeds the provenance header {lambda, seed, n,
software_version} so downstream steps stay reproducible.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .distances import compare_families
from .fitting import FitError, fit_family, params_from_dict, params_to_dict
from .geometry import CellConstructionError
from .sampling import FeatureSample, SimulationConfig, simulate_batch
from .scaling import scale_factor, scale_params, scale_sample
from .stats import DEFAULT_GRID_POINTS, EmpiricalDistribution, face_pmf, kde_epanechnikov, moments

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

DEFAULT_BANDWIDTHS = {"volume": 0.05, "surface": 0.25}
ALL_FAMILIES = ("gamma", "gengamma", "lognormal")


class DataError(Exception):
    """Unreadable or inconsistent input artifact."""


def _print_moment_summary(sample: FeatureSample, out=sys.stdout):
    rows = [("volume", sample.volumes),
            ("surface", sample.surface_areas),
            ("faces", sample.face_counts.astype(float))]
    print(f"{'feature':<10}{'mu1':>12}{'sigma':>12}{'mu2':>14}{'mu3':>16}{'mu4':>18}", file=out)
    for name, col in rows:
        m = moments(col)
        print(f"{name:<10}{m.mu1:>12.5f}{m.sigma:>12.5f}{m.mu2:>14.5f}"
              f"{m.mu3:>16.5f}{m.mu4:>18.5f}", file=out)


def _load_dataset(path) -> FeatureSample:
    try:
        return FeatureSample.read(path)
    except FileNotFoundError:
        raise DataError(f"dataset not found: {path}")
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot parse dataset {path}: {exc}")


def _transport(sample: FeatureSample, target_lam) -> FeatureSample:
    """Move a dataset to another intensity via the exact scaling maps."""
    if target_lam is None or target_lam == sample.lam:
        return sample
    rel = target_lam / sample.lam
    return FeatureSample(
        lam=target_lam, seed=sample.seed,
        volumes=scale_sample(sample.volumes, "volume", rel),
        surface_areas=scale_sample(sample.surface_areas, "surface", rel),
        face_counts=sample.face_counts,
        vertex_counts=sample.vertex_counts)


def _default_bandwidth(feature, lam):
    """Pinned unit-intensity bandwidths, transported like the feature itself."""
    return DEFAULT_BANDWIDTHS[feature] / scale_factor(feature, lam)


def _write_table(path, header: dict, columns: dict):
    """Two-or-more column CSV with the usual '#' JSON provenance line."""
    names = list(columns)
    cols = [np.asarray(columns[c]) for c in names]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header) + "\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def cmd_simulate(args) -> int:
    cfg = SimulationConfig(lam=args.lam, n_cells=args.n, seed=args.seed,
                           initial_radius=args.initial_radius,
                           growth_factor=args.growth_factor,
                           threads=args.threads)
    t0 = time.time()
    sample = simulate_batch(cfg)
    elapsed = time.time() - t0
    if args.format == "json":
        sample.to_json(args.out)
    else:
        sample.to_csv(args.out)
    print(f"wrote {sample.n} cells at lambda={cfg.lam} to {args.out} "
          f"({elapsed:.1f}s, seed={cfg.seed})")
    if sample.n >= 2:
        _print_moment_summary(sample)
    return EXIT_OK


def _fit_report(sample: FeatureSample, feature, families, bandwidth, grid_points):
    values = sample.column(feature).astype(float)
    fits = [fit_family(values, fam) for fam in families]
    report = {
        "lambda": sample.lam,
        "seed": sample.seed,
        "feature": feature,
        "bandwidth": bandwidth,
        "software_version": __version__,
        "fits": [params_to_dict(f) for f in fits],
    }
    if len(fits) > 1:
        rows = compare_families(values, fits, bandwidth)
        report["comparison"] = [r.to_dict() for r in rows]
    return report, fits


def cmd_fit(args) -> int:
    sample = _transport(_load_dataset(args.inp), args.target_lam)
    families = ALL_FAMILIES if args.family == "all" else (args.family,)
    bandwidth = args.bandwidth or _default_bandwidth(args.feature, sample.lam)
    report, _ = _fit_report(sample, args.feature, families, bandwidth, args.grid_points)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    if "comparison" in report:
        print(f"\n{'family':<12}{'sup_distance':>14}{'tv_distance':>14}")
        for row in report["comparison"]:
            print(f"{row['family']:<12}{row['sup_distance']:>14.5f}{row['tv_distance']:>14.5f}")
    return EXIT_OK


def cmd_scale(args) -> int:
    with open(args.inp, "r", encoding="utf-8") as fh:
        first = fh.read(1)
    if first == "{":
        with open(args.inp, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if "fits" in doc:
            return _scale_report(doc, args)
    sample = _load_dataset(args.inp)
    if not args.out:
        raise DataError("scaling a dataset requires --out")
    scaled = _transport(sample, args.target_lam)
    if args.out.endswith(".json"):
        scaled.to_json(args.out)
    else:
        scaled.to_csv(args.out)
    print(f"scaled dataset lambda {sample.lam} -> {args.target_lam}: {args.out}")
    return EXIT_OK


def _scale_report(doc, args) -> int:
    rel = args.target_lam / float(doc["lambda"])
    feature = doc["feature"]
    scaled = []
    for fit_doc in doc["fits"]:
        fit = params_from_dict(fit_doc)
        scaled.append(params_to_dict(scale_params(fit, feature, rel)))
    out_doc = dict(doc)
    out_doc["lambda"] = args.target_lam
    out_doc["fits"] = scaled
    out_doc.pop("comparison", None)
    text = json.dumps(out_doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_export(args) -> int:
    sample = _transport(_load_dataset(args.inp), args.target_lam)
    header = sample.header()
    header["what"] = args.what
    header["feature"] = args.feature
    if args.what == "pmf":
        pmf = face_pmf(sample.face_counts)
        _write_table(args.out, header, {
            "F": list(pmf),
            "n_f": [pmf[f][0] for f in pmf],
            "p_f": [pmf[f][1] for f in pmf]})
    elif args.what == "ecdf":
        values = np.sort(sample.column(args.feature).astype(float))
        _write_table(args.out, header, {
            "x": values,
            "F": np.arange(1, values.size + 1) / values.size})
    elif args.what == "kde":
        values = sample.column(args.feature).astype(float)
        bandwidth = args.bandwidth or _default_bandwidth(args.feature, sample.lam)
        grid = np.linspace(0.0, float(np.max(values)) + 3.0 * bandwidth, args.grid_points)
        est = kde_epanechnikov(values, bandwidth, grid)
        header["bandwidth"] = bandwidth
        _write_table(args.out, header, {"x": est.grid, "density": est.density})
    elif args.what == "qq":
        values = sample.column(args.feature).astype(float)
        fit = fit_family(values, args.family)
        n = values.size
        probs = np.arange(1, n + 1) / (n + 1.0)
        header["family"] = args.family
        _write_table(args.out, header, {
            "theoretical": fit.ppf(probs),
            "empirical": np.sort(values)})
    else:  # pragma: no cover - argparse restricts choices
        raise DataError(f"unknown export kind {args.what!r}")
    print(f"wrote {args.what} export to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvcell",
        description="Simulate typical Poisson-Voronoi cells, fit and compare "
                    "distribution families, and rescale results across intensities.")
    parser.add_argument("--version", action="version", version=f"pvcell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a feature dataset")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="process intensity (default 1)")
    p.add_argument("--n", type=int, required=True, help="number of cells")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: VORONOI_THREADS or all cores)")
    p.add_argument("--initial-radius", type=float, default=None)
    p.add_argument("--growth-factor", type=float, default=1.5)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood fits and comparison")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--feature", choices=("volume", "surface"), required=True)
    p.add_argument("--family", choices=ALL_FAMILIES + ("all",), default="all")
    p.add_argument("--lambda", dest="target_lam", type=float, default=None,
                   help="analyze at this intensity via the exact scaling maps")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="KDE bandwidth for the TV comparison "
                        "(default 0.05/0.25 at unit intensity, transported)")
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("scale", help="transport a dataset or fit report to another intensity")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--lambda", dest="target_lam", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("export", help="plot-ready two-column data")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--what", choices=("kde", "ecdf", "pmf", "qq"), required=True)
    p.add_argument("--feature", choices=("volume", "surface", "faces"), default="volume")
    p.add_argument("--family", choices=ALL_FAMILIES, default="gengamma")
    p.add_argument("--lambda", dest="target_lam", type=float, default=None,
                   help="export at this intensity via the exact scaling maps")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, CellConstructionError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
