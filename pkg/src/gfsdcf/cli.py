"""Command-line entry point: ``gfsdcf {track,eval,ablate,sweep,synth}``.

Configuration comes from a flat ``key = value`` file (``#`` comments) and
per-key flags; flags win over the file, the file over built-in defaults.

Exit codes: 0 success, 2 configuration or usage error, 3 I/O or data
error, 4 solver divergence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .errors import (ConfigError, ConsistencyError, DivergenceError, FormatError, GfsError,
                     InputError, ParseError, SequenceIOError, SpecError)
from .features import FeatureSpec
from .harness.experiments import (outcome_from_result, read_result_boxes, results_document, run_ablation,
                                  run_tracker, sensitivity_sweep, write_results)
from .harness.io import load_sequence, parse_groundtruth, write_sequence
from .harness.metrics import compute_metrics, curve_csv, format_report
from .harness.synthetic import SyntheticSpec, generate_synthetic
from .solver import AdmmConfig, RegularisationConfig, SelectionConfig
from .tracker import VARIANTS, TrackerConfig

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGED = 0, 2, 3, 4


# --------------------------------------------------------------------------
# config keys

def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.replace(" ", "").split(",") if v)


def _parse_words(text: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


# key -> (section, parser, help)
CONFIG_KEYS: Dict[str, Tuple[str, Callable[[str], object], str]] = {
    "feature_types": ("features", _parse_words,
                      "comma list of intensity, gradient_hist, colour_names, or external alone"),
    "cell_size": ("features", int, "pixels per feature cell (cells per FTEN cell for external)"),
    "orientation_bins": ("features", int, "orientation bins of the gradient histogram"),
    "cosine_window": ("features", _parse_bool, "apply a Hann window to the features"),
    "lambda_spatial": ("regularisation", float, "weight of the spatial group-sparsity term"),
    "lambda_channel": ("regularisation", float, "weight of the channel group-sparsity term"),
    "lambda_temporal": ("regularisation", float, "weight of the temporal smoothness term"),
    "ridge_lambda": ("regularisation", float, "plain ridge weight"),
    "channel_ratio": ("selection", float, "fraction of channels kept, in (0, 1]"),
    "spatial_ratio": ("selection", float, "fraction of spatial cells kept, in (0, 1]"),
    "per_block": ("selection", _parse_bool, "select channels within each feature block"),
    "mu_init": ("admm", float, "initial ADMM penalty"),
    "mu_growth": ("admm", float, "penalty growth factor per iteration (>= 1)"),
    "mu_max": ("admm", float, "penalty ceiling"),
    "max_iters": ("admm", int, "maximum ADMM iterations per frame"),
    "tol_primal": ("admm", float, "relative primal residual tolerance"),
    "tol_change": ("admm", float, "relative iterate change tolerance"),
    "alpha": ("tracker", float, "model update rate in [0, 1]"),
    "padding": ("tracker", float, "search window is max(w, h) * (1 + padding)"),
    "sigma_factor": ("tracker", float, "label sigma as a fraction of sqrt(w * h) in cells"),
    "scale_factors": ("tracker", _parse_floats, "comma list of detection scales, must contain 1.0"),
    "scale_penalty": ("tracker", float, "peak multiplier for scales other than 1.0"),
    "variant": ("tracker", str, "one of " + ", ".join(VARIANTS)),
    "model_side": ("tracker", int, "side in pixels of the resampled search window"),
    "keep_history": ("tracker", _parse_bool, "keep every learned filter (rank diagnostic)"),
    "subcell": ("tracker", _parse_bool, "parabolic sub-cell peak refinement"),
    "normalise_features": ("tracker", _parse_bool, "rescale features to unit mean channel energy"),
}

_SECTIONS = {"features": FeatureSpec, "regularisation": RegularisationConfig,
             "selection": SelectionConfig, "admm": AdmmConfig}


def _defaults() -> Dict[str, object]:
    cfg = TrackerConfig()
    out = {}
    for key, (section, _, _) in CONFIG_KEYS.items():
        holder = cfg if section == "tracker" else getattr(cfg, section)
        out[key] = getattr(holder, key)
    return out


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def read_key_values(path, allowed: Sequence[str], what: str = "config") -> Dict[str, str]:
    """Parse a flat ``key = value`` file; unknown keys raise ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SequenceIOError(f"{what} file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise SequenceIOError(f"cannot read {what} file {path}: {exc}") from exc
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in allowed:
            raise ConfigError(f"{path}:{lineno}: unknown {what} key '{key}'")
        values[key] = value
    return values


def build_config(values: Dict[str, str]) -> TrackerConfig:
    """TrackerConfig from raw string values keyed by config key names."""
    parsed: Dict[str, Dict[str, object]] = {s: {} for s in ("tracker", *_SECTIONS)}
    for key, raw in values.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        section, parser, _ = CONFIG_KEYS[key]
        try:
            parsed[section][key] = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}': {exc}") from None
    base = TrackerConfig()
    try:
        sections = {name: replace(getattr(base, name), **parsed[name]) for name in _SECTIONS}
        return replace(base, **sections, **parsed["tracker"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def config_record(cfg: TrackerConfig) -> Dict[str, object]:
    out = {}
    for key, (section, _, _) in CONFIG_KEYS.items():
        holder = cfg if section == "tracker" else getattr(cfg, section)
        value = getattr(holder, key)
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def synthetic_spec_from_file(path, seed: Optional[int]) -> SyntheticSpec:
    names = SyntheticSpec.field_names()
    raw = read_key_values(path, names, what="synthetic spec")
    types = {f.name: f.type for f in fields(SyntheticSpec)}
    kwargs: Dict[str, object] = {}
    for key, value in raw.items():
        kind = str(types[key])
        try:
            if "int" in kind:
                kwargs[key] = int(value)
            elif "float" in kind:
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError:
            raise SpecError(f"{path}: bad value for '{key}': {value!r}") from None
    if seed is not None:
        kwargs["seed"] = seed
    return SyntheticSpec(**kwargs)


# --------------------------------------------------------------------------
# argument parsing

def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="flat 'key = value' config file")
    group = p.add_argument_group("config keys (flags override the config file)")
    defaults = _defaults()
    for key, (_, _, text) in CONFIG_KEYS.items():
        group.add_argument(_flag(key), dest="key_" + key, metavar="V",
                           help=f"{key}: {text} (default {_format_value(defaults[key])})")


def _add_source_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--seq", metavar="DIR", help="OTB-style sequence directory")
    src.add_argument("--synthetic", metavar="SPECFILE", help="synthetic sequence spec file")
    p.add_argument("--seed", type=int, default=None, help="seed for synthetic sequences")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="parallel runs for ablate/sweep (default: available cores)")


def _add_metric_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dp-threshold", type=float, default=20.0, metavar="PX",
                   help="distance precision threshold in pixels (default 20)")
    p.add_argument("--op-iou", type=float, default=0.5, metavar="R",
                   help="overlap precision IoU threshold (default 0.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gfsdcf", description=__doc__.split("\n\n")[0],
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Config keys: " + ", ".join(CONFIG_KEYS)
               + "\nSynthetic spec keys: " + ", ".join(SyntheticSpec.field_names()))
    parser.add_argument("--version", action="version", version=f"gfsdcf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track one sequence and write a results file")
    _add_source_args(p)
    p.add_argument("--out", required=True, metavar="FILE", help="results JSON file")
    _add_metric_args(p)
    _add_config_args(p)

    p = sub.add_parser("eval", help="score a results file against ground truth")
    p.add_argument("--results", required=True, metavar="FILE", help="results JSON file")
    p.add_argument("--gt", required=True, metavar="FILE", help="groundtruth_rect.txt file")
    p.add_argument("--variant", default=None, help="run to score (default: first run)")
    p.add_argument("--curves", metavar="PREFIX", default=None,
                   help="also write PREFIX_precision.csv and PREFIX_success.csv")
    _add_metric_args(p)

    p = sub.add_parser("ablate", help="run all five variants on one sequence")
    _add_source_args(p)
    p.add_argument("--out", required=True, metavar="FILE", help="results JSON file")
    _add_metric_args(p)
    _add_config_args(p)

    p = sub.add_parser("sweep", help="lambda sensitivity sweep (cartesian product)")
    _add_source_args(p)
    p.add_argument("--out", required=True, metavar="FILE", help="results JSON file")
    for key in ("lambda_spatial", "lambda_channel", "lambda_temporal"):
        p.add_argument("--grid-" + key.replace("_", "-"), dest="grid_" + key, metavar="LIST",
                       help=f"comma list of {key} values (default: the configured value)")
    _add_metric_args(p)
    _add_config_args(p)

    p = sub.add_parser("synth", help="write a synthetic sequence directory")
    p.add_argument("--spec", required=True, metavar="SPECFILE", help="synthetic spec file")
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="overrides the spec's seed")
    return parser


# --------------------------------------------------------------------------
# commands

def _config_from_args(args) -> TrackerConfig:
    values: Dict[str, str] = {}
    if args.config:
        values.update(read_key_values(args.config, list(CONFIG_KEYS)))
    for key in CONFIG_KEYS:
        flag_value = getattr(args, "key_" + key)
        if flag_value is not None:
            values[key] = flag_value
    return build_config(values)


def _load_source(args):
    if args.seq:
        seq = load_sequence(args.seq)
        return seq, seq.spec.name
    spec = synthetic_spec_from_file(args.synthetic, args.seed)
    return generate_synthetic(spec), spec.name


def _metric_args(args) -> dict:
    return {"dp_threshold": args.dp_threshold, "op_iou": args.op_iou}


def _summary(outcomes) -> str:
    lines = [f"{'variant':<10}{'CLE':>9}{'DP':>8}{'OP':>8}{'AUC':>8}"]
    for out in outcomes:
        if out.error:
            lines.append(f"{out.variant:<10}  failed: {out.error}")
        else:
            m = out.metrics
            lines.append(f"{out.variant:<10}{m.mean_cle:9.3f}{m.dp_at_threshold:8.3f}"
                         f"{m.op_at_iou:8.3f}{m.auc:8.3f}")
    return "\n".join(lines)


def cmd_track(args) -> int:
    cfg = _config_from_args(args)
    seq, name = _load_source(args)
    out = outcome_from_result(cfg.variant, run_tracker(seq, cfg), seq.boxes, **_metric_args(args))
    write_results(args.out, results_document("track", name, config_record(cfg), [out]))
    print(_summary([out]))
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = read_result_boxes(args.results, args.variant)
    try:
        gt = parse_groundtruth(Path(args.gt).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SequenceIOError(f"ground truth not found: {args.gt}") from None
    report = compute_metrics(pred, gt, args.dp_threshold, args.op_iou)
    print(format_report(report))
    doc = report.as_dict()
    print(json.dumps({k: v for k, v in doc.items() if not k.endswith("_curve")}, sort_keys=True))
    if args.curves:
        Path(f"{args.curves}_precision.csv").write_text(curve_csv(report.precision_curve))
        Path(f"{args.curves}_success.csv").write_text(curve_csv(report.success_curve))
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _config_from_args(args)
    seq, name = _load_source(args)
    outcomes = run_ablation(seq, cfg, workers=args.threads, **_metric_args(args))
    write_results(args.out, results_document("ablate", name, config_record(cfg),
                                             list(outcomes.values())))
    print(_summary(outcomes.values()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    grid = {}
    for key in ("lambda_spatial", "lambda_channel", "lambda_temporal"):
        raw = getattr(args, "grid_" + key)
        if raw is not None:
            try:
                grid[key] = _parse_floats(raw)
            except ValueError as exc:
                raise ConfigError(f"bad sweep list for {key}: {exc}") from None
            if not grid[key]:
                raise ConfigError(f"empty sweep list for {key}")
    seq, name = _load_source(args)
    rows = sensitivity_sweep(seq, cfg, grid, workers=args.threads, **_metric_args(args))
    write_results(args.out, results_document("sweep", name, config_record(cfg), sweep=rows))
    print(f"{'lambda_spatial':>15}{'lambda_channel':>15}{'lambda_temporal':>16}{'AUC':>8}")
    for r in rows:
        print(f"{r.lambda_spatial:15g}{r.lambda_channel:15g}{r.lambda_temporal:16g}{r.auc:8.3f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = synthetic_spec_from_file(args.spec, args.seed)
    seq = generate_synthetic(spec)
    write_sequence(args.out, seq.frames, seq.boxes, seq.feature_maps)
    print(f"wrote {len(seq.frames)} frames to {args.out}")
    return EXIT_OK


COMMANDS = {"track": cmd_track, "eval": cmd_eval, "ablate": cmd_ablate,
            "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except DivergenceError as exc:
        print(f"error: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (SequenceIOError, FormatError, ParseError, ConsistencyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, SpecError, InputError, GfsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
