"""Command-line front end: ``matchillum <command> [options]``.

Every run writes into one output directory, together with the resolved
configuration (``run_config.json``), so a result can be traced back to its
inputs. Numbers in JSON and CSV outputs carry 12 significant digits, which
keeps repeated runs byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, datasets
from .colorimetry import CmfSet, xyz_of
from .correction import evaluate_samples
from .errors import (
    DomainError,
    FormatError,
    InfeasibleError,
    MatchIllumError,
    NonConvergenceError,
    RangeError,
    RankError,
    ValidationError,
)
from .illuminator import (
    characterize,
    load_manifest,
    save_manifest,
    solve_metamer,
    synthetic_illuminator,
)
from .matcher import MatchProblem, match_complex, match_simple
from .spectral import GRID, SensorSet, SpectralGrid, format_number, load_spectral_csv, write_spectral_csv
from .synth import fit_combinations, macbeth_candidates, synth_rgb, write_fits_csv

log = logging.getLogger("matchillum")

DIGITS = 12
EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NONCONVERGENCE = 0, 1, 2, 3, 4

DEFAULTS = {
    "camera": None,
    "manifest": None,
    "cmf": None,
    "target": "D65",
    "reflectances": ["macbeth", "sfu1995"],
    "mode": "both",
    "tol": 1e-8,
    "max_iters": 200,
    "seed": 0,
    "shift": 17.0,
    "noise": 0.0,
    "grid": "400:10:700",
}


# -- serialization -----------------------------------------------------------


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(format_number(obj, DIGITS))
    return obj


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_round(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# -- configuration -----------------------------------------------------------


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        p = Path(args.config)
        try:
            loaded = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read config {p}: {exc}") from exc
        unknown = sorted(set(loaded) - set(DEFAULTS) - {"out"})
        if unknown:
            raise FormatError(f"unknown config keys: {', '.join(unknown)}")
        base = p.resolve().parent
        for key in ("camera", "manifest", "cmf"):
            if loaded.get(key):
                loaded[key] = str(base / loaded[key])
        if "reflectances" in loaded:
            loaded["reflectances"] = [
                r if r in ("macbeth", "sfu1995") else str(base / r) for r in loaded["reflectances"]
            ]
        if loaded.get("target") and loaded["target"].upper() not in datasets.ILLUMINANTS:
            loaded["target"] = str(base / loaded["target"])
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["mode"] not in ("simple", "complex", "both"):
        raise FormatError(f"mode must be simple, complex or both, not {cfg['mode']!r}")
    if SpectralGrid.parse(cfg["grid"]) != GRID:
        raise FormatError("only the 400:10:700 grid is supported")
    if not cfg["tol"] > 0:
        raise FormatError("tol must be positive")
    problems = [
        f"{key}: file not found: {cfg[key]}"
        for key in ("camera", "manifest", "cmf")
        if cfg[key] and not Path(cfg[key]).is_file()
    ]
    problems += [
        f"reflectances: file not found: {r}"
        for r in cfg["reflectances"]
        if r not in ("macbeth", "sfu1995") and not Path(r).is_file()
    ]
    if problems:
        raise ValidationError(problems)
    return cfg


def _modes(cfg):
    return ("simple", "complex") if cfg["mode"] == "both" else (cfg["mode"],)


def _cmf(cfg) -> CmfSet:
    if cfg["cmf"]:
        return CmfSet(load_spectral_csv(cfg["cmf"])[1])
    return datasets.cie1931()


def _camera(cfg) -> SensorSet:
    if cfg["camera"]:
        names, m = load_spectral_csv(cfg["camera"])
        if m.shape[1] != 3:
            raise FormatError(f"{cfg['camera']}: expected 3 sensor columns, found {m.shape[1]}")
        return SensorSet(m, tuple(names))
    return datasets.nikon_d5100()


def _model(cfg):
    if cfg["manifest"]:
        return load_manifest(cfg["manifest"])
    return synthetic_illuminator(shift_nm=cfg["shift"], noise=cfg["noise"], seed=cfg["seed"])


def _target(cfg) -> np.ndarray:
    t = cfg["target"]
    if t.upper() in datasets.ILLUMINANTS:
        return datasets.illuminant(t)
    names, m = load_spectral_csv(t)
    return m[:, 0]


def _reflectance_sets(cfg):
    out = {}
    for r in cfg["reflectances"]:
        if r == "macbeth":
            out[r] = datasets.macbeth()
        elif r == "sfu1995":
            out[r] = datasets.sfu1995_standin()
        else:
            names, m = load_spectral_csv(r)
            out[Path(r).stem] = (tuple(names), m)
    return out


def _outdir(args, cfg) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "run_config.json", {"command": args.command, "version": __version__, **cfg})
    return out


# -- commands ----------------------------------------------------------------


def cmd_characterize(args, cfg) -> int:
    X = _cmf(cfg)
    if args.measured:
        model = load_manifest(args.measured)
        source = "measured"
    else:
        model = _model(cfg) if not args.synthetic and cfg["manifest"] else synthetic_illuminator(
            shift_nm=cfg["shift"], noise=cfg["noise"], seed=cfg["seed"]
        )
        source = "synthetic" if not cfg["manifest"] or args.synthetic else "manifest"
    out = _outdir(args, cfg)
    save_manifest(model, out / "illuminator.json", digits=DIGITS)
    rows = characterize(model, X)
    report = {
        "source": source,
        "k": model.k,
        "levels": model.levels,
        "max_peak_shift_nm": max(abs(r.peak_shift_nm) for r in rows),
        "channels": [
            {
                "name": r.name,
                "peak_full_nm": r.peak_full_nm,
                "peak_low_nm": r.peak_low_nm,
                "peak_shift_nm": r.peak_shift_nm,
                "uv_drift": r.uv_drift,
                "uv_by_level": r.uv,
            }
            for r in rows
        ],
    }
    write_json(out / "characterization.json", report)
    print(f"{'channel':<8} {'peak@1':>8} {'peak@low':>9} {'shift':>7} {'uv drift':>9}")
    for r in rows:
        print(
            f"{r.name:<8} {r.peak_full_nm:8.1f} {r.peak_low_nm:9.1f} "
            f"{r.peak_shift_nm:7.1f} {r.uv_drift:9.4f}"
        )
    print(f"max peak shift: {report['max_peak_shift_nm']:.1f} nm")
    return EXIT_OK


def _metamer_record(met, X):
    xyz = xyz_of(met.light, np.ones(GRID.n), X)
    return {
        "weights": met.weights,
        "scale": met.scale,
        "xyz": xyz,
        "xyz_relative": xyz / xyz[1],
        "xyz_residual": met.xyz_residual,
    }


def cmd_metamer(args, cfg) -> int:
    X, model, target = _cmf(cfg), _model(cfg), _target(cfg)
    out = _outdir(args, cfg)
    report, names, spds = {"target": cfg["target"]}, [], []
    for mode in _modes(cfg):
        met = solve_metamer(model, target, X, mode)
        report[mode] = _metamer_record(met, X)
        names.append(f"metamer_{mode}")
        spds.append(met.light)
        print(f"{mode}: weights {np.array2string(met.weights, precision=4)}")
        print(f"{mode}: relative XYZ {np.array2string(report[mode]['xyz_relative'], precision=4)}")
    write_json(out / "metamer.json", report)
    write_spectral_csv(out / "metamer_spd.csv", names, np.column_stack(spds), digits=DIGITS)
    return EXIT_OK


def _measurement_light(cfg, model, X, target, mode):
    """The metamer a matched light of ``mode`` is scored against.

    Each mode uses its own metamer, so a light the model renders exactly is
    always available to the matcher.
    """
    return solve_metamer(model, target, X, mode)


def _solve(cfg, model, Q, X, e_measure, mode):
    p = MatchProblem(e_measure, Q, X, model, mode, tol=cfg["tol"], max_iters=cfg["max_iters"])
    return match_simple(p) if mode == "simple" else match_complex(p)


def cmd_match(args, cfg) -> int:
    X, Q, model, target = _cmf(cfg), _camera(cfg), _model(cfg), _target(cfg)
    out = _outdir(args, cfg)
    names, spds = [], []
    for mode in _modes(cfg):
        met = _measurement_light(cfg, model, X, target, mode)
        try:
            res = _solve(cfg, model, Q, X, met.light, mode)
        except NonConvergenceError as exc:
            best = exc.best
            if best is not None and hasattr(best, "to_dict"):
                write_json(out / f"match_{mode}_failed.json", best.to_dict(DIGITS))
            raise
        write_json(out / f"match_{mode}.json", res.to_dict(DIGITS))
        names += [f"metamer_{mode}", f"matched_{mode}"]
        spds += [met.light, res.light]
        print(
            f"{mode}: objective {res.objective:.6g} after {res.iterations} iterations; "
            f"weights {np.array2string(res.c_m, precision=4)}"
        )
    write_spectral_csv(out / "matched_spd.csv", names, np.column_stack(spds), digits=DIGITS)
    return EXIT_OK


STAT_FIELDS = ("mean", "median", "p95", "p99", "max", "n")


def cmd_evaluate(args, cfg) -> int:
    X, Q, model, target = _cmf(cfg), _camera(cfg), _model(cfg), _target(cfg)
    sets = _reflectance_sets(cfg)
    out = _outdir(args, cfg)
    # condition -> (capture light, measurement light, mode of the metamer used)
    lights = {}
    for mode in _modes(cfg):
        met = _measurement_light(cfg, model, X, target, mode)
        lights.setdefault("metamer", (met.light, met.light, mode))
        lights[f"{mode}_matched"] = (_solve(cfg, model, Q, X, met.light, mode).light, met.light, mode)
    report, rows = {}, []
    for set_name, (ids, R) in sets.items():
        report[set_name] = {}
        per_sample = {}
        for cond, (capture, measure, mode) in lights.items():
            ev = evaluate_samples(Q, measure, capture, R, X, white_balance=args.white_balance)
            report[set_name][cond] = {**ev.stats.to_dict(DIGITS), "measured_under": f"metamer_{mode}"}
            per_sample[cond] = ev.delta_e
            rows.append([set_name, cond] + [getattr(ev.stats, f) for f in STAT_FIELDS])
        with (out / f"delta_e_{set_name}.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", *per_sample])
            for i, sid in enumerate(ids):
                w.writerow([sid, *(format_number(v[i], DIGITS) for v in per_sample.values())])
    write_json(out / "report.json", report)
    with (out / "report.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["set", "condition", *STAT_FIELDS])
        for r in rows:
            w.writerow(r[:2] + [format_number(v, DIGITS) for v in r[2:-1]] + [r[-1]])
    print(f"{'set':<10} {'condition':<16} " + " ".join(f"{f:>8}" for f in STAT_FIELDS[:-1]))
    for r in rows:
        print(f"{r[0]:<10} {r[1]:<16} " + " ".join(f"{v:8.3f}" for v in r[2:-1]))
    return EXIT_OK


def _read_rgb_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or len(rows[0]) != 4:
        raise FormatError(f"{path}: expected header 'id,R,G,B'")
    try:
        return [r[0] for r in rows[1:]], np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric response ({exc})") from exc


def cmd_synth(args, cfg) -> int:
    if args.targets:
        tids, T = load_spectral_csv(args.targets)
    else:
        tids, T = datasets.sfu1995_standin()
    if args.candidates:
        cids, C = load_spectral_csv(args.candidates)
        if C.shape[1] == 24:
            cids, C = macbeth_candidates(cids, C, args.neutral)
    else:
        cids, C = macbeth_candidates(*datasets.macbeth(), args.neutral)
    out = _outdir(args, cfg)
    fits = fit_combinations(T, C)
    write_fits_csv(out / "fits.csv", tids, fits, DIGITS)
    err = np.array([f.rel_error for f in fits])
    coeffs = np.concatenate([f.coeffs for f in fits])
    summary = {
        "candidates": list(cids),
        "n_targets": len(fits),
        "rel_error": {
            "median": np.median(err),
            "p75": np.percentile(err, 75),
            "max": err.max(),
        },
        "coeff_range": [coeffs.min(), coeffs.max()],
    }
    if args.measured_rgb:
        rids, rgb = _read_rgb_csv(args.measured_rgb)
        if rgb.shape[0] != len(cids):
            lookup = dict(zip(rids, rgb))
            missing = [c for c in cids if c not in lookup]
            if missing:
                raise FormatError(f"{args.measured_rgb}: no responses for {missing}")
            rgb = np.array([lookup[c] for c in cids])
        with (out / "synth_rgb.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["target_id", "R", "G", "B"])
            for tid, f in zip(tids, fits):
                w.writerow([tid, *(format_number(v, DIGITS) for v in synth_rgb(f, rgb))])
    write_json(out / "synth_summary.json", summary)
    e = summary["rel_error"]
    print(
        f"{len(fits)} targets: median {100 * e['median']:.2f}%, "
        f"75th pct {100 * e['p75']:.2f}%, max {100 * e['max']:.2f}%"
    )
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default="matchillum_out", help="output directory")
    common.add_argument("--grid", help="wavelength grid start:step:end (only 400:10:700)")
    common.add_argument("--mode", choices=("simple", "complex", "both"))
    common.add_argument("--tol", type=float, help="matcher stopping tolerance")
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--seed", type=int, help="seed for synthetic generators")
    common.add_argument("--camera", help="spectral CSV with three sensor columns")
    common.add_argument("--manifest", help="illuminator manifest JSON")
    common.add_argument("--cmf", help="spectral CSV overriding the CIE 1931 observer")
    common.add_argument("--target", help="D65, A, or a spectral CSV")
    common.add_argument("--shift", type=float, help="synthetic peak shift at low drive (nm)")
    common.add_argument("--noise", type=float, help="synthetic relative noise level")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="matchillum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", parents=[common], help="build or validate an illuminator")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--synthetic", action="store_true", help="generate the Gaussian stand-in")
    g.add_argument("--measured", help="validate a measured manifest")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("metamer", parents=[common], help="solve for a metamer of the target")
    p.set_defaults(func=cmd_metamer)

    p = sub.add_parser("match", parents=[common], help="solve for the matched illumination")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("evaluate", parents=[common], help="Delta E report per condition")
    p.add_argument("--reflectances", nargs="+", help="macbeth, sfu1995, or spectral CSVs")
    p.add_argument("--white-balance", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", parents=[common], help="fit reflectances from chart patches")
    p.add_argument("--targets", help="spectral CSV of target reflectances (default: sfu1995)")
    p.add_argument("--candidates", help="spectral CSV of candidate patches (default: Macbeth)")
    p.add_argument("--neutral", help="neutral patch name to include as the 19th candidate")
    p.add_argument("--measured-rgb", help="CSV id,R,G,B of the candidate patch responses")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps(_round(exc.diagnostic), indent=2), file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (FormatError, RangeError, DomainError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankError, MatchIllumError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
