"""Command-line entry point: ``sma-sim <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, SmaSimError

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one-line diagnostic; the full usage is behind --help
        raise UsageError(f"{message} (see '{self.prog} --help')")


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="override the random seed")
    p.add_argument("--config", type=Path, default=None, help="JSON configuration document")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sma-sim", description="SMA-wire microactuator simulation and characterization")
    parser.add_argument("--version", action="version", version=f"sma-sim {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="simulate one scenario and write its trace CSV")
    _common(p)
    p.add_argument("--frequency", type=float, help="override the PWM frequency (Hz)")
    p.add_argument("--duty", type=float, help="override the duty fraction (0..1)")
    p.add_argument("--volts", type=float, help="override the drive amplitude (V)")
    p.add_argument("--duration", type=float, help="override the duration (s)")

    p = sub.add_parser("campaign", help="run the repeated {f, DC} protocol and write reports")
    p.add_argument("--seed", type=int, default=None, help="override every scenario's noise seed")
    p.add_argument("--config", type=Path, action="append", default=None,
                   help="scenario JSON; repeat to combine media in one report")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    p.add_argument("--pairs", type=str, default=None, help='pairs as "f:duty,...", e.g. "1:0.07,2:0.08"')
    p.add_argument("--repeats", type=int, default=None, help="override the repeat count")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default SMA_SIM_THREADS or CPU count)")
    p.add_argument("--force", action="store_true", help="allow combining scenarios with different plants")

    p = sub.add_parser("identify", help="fit IIR/FIR sensor-path models to a dataset CSV")
    _common(p)
    p.add_argument("dataset", type=Path, help="CSV with columns time_s,input,output")
    p.add_argument("--kind", choices=("iir", "fir", "both"), default=None)
    p.add_argument("--order", type=int, default=None, help="IIR order (default 100)")
    p.add_argument("--fir-order", type=int, default=None, help="FIR order (default 256)")

    p = sub.add_parser("dataset", help="write a synthetic sensor-path identification dataset")
    _common(p)
    p.add_argument("--gain", type=float, default=0.633)
    p.add_argument("--snr-db", type=float, default=40.0)

    p = sub.add_parser("calibrate", help="fit free parameters of a calibration problem")
    _common(p)
    p.add_argument("--preset", choices=("reference",), default=None,
                   help="run the built-in air/water then chamber calibration instead of --config")
    p.add_argument("--max-evals", type=int, default=None)

    p = sub.add_parser("compare", help="percent increase of mean power between two campaign CSVs")
    p.add_argument("base", type=Path)
    p.add_argument("new", type=Path)
    p.add_argument("--force", action="store_true", help="compare even if the plant hashes differ")
    p.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--config", type=Path, default=None, help=argparse.SUPPRESS)
    p.add_argument("--out", type=Path, default=None, help="also write compare.csv here")
    return parser


def _load_scenario(path: Path, with_pairs: bool = False):
    from .scenario import ScenarioConfig, load_json

    if path is None:
        raise UsageError("--config is required")
    doc = load_json(path)
    cfg = ScenarioConfig.from_dict(doc, base_dir=path.parent)
    if not with_pairs:
        return cfg
    pairs = doc.get("pairs")
    if pairs is not None:
        try:
            pairs = [(float(f), float(d)) for f, d in pairs]
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: 'pairs' must be a list of [f_hz, duty_fraction]") from None
    return cfg, pairs


def _mkdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _provenance_lines(cfg, seed):
    return [
        f"config_hash: {cfg.config_hash()}",
        f"plant_hash: {cfg.plant.plant_hash()}",
        f"seed: {seed}",
        f"tool_version: {__version__}",
    ]


def cmd_simulate(args) -> int:
    cfg = _load_scenario(args.config)
    drive = cfg.drive
    if args.frequency is not None:
        drive = replace(drive, frequency_hz=args.frequency)
    if args.duty is not None:
        drive = replace(drive, duty_fraction=args.duty)
    if args.volts is not None:
        drive = replace(drive, amplitude_volts=args.volts)
    changes = {"drive": drive}
    if args.duration is not None:
        changes["duration_s"] = args.duration
    if args.seed is not None:
        changes["noise_seed"] = args.seed
    cfg = replace(cfg, **changes)
    out = cfg.run()
    path = _mkdir(args.out) / f"trace_{cfg.name}.csv"
    out.trace.to_csv(path, _provenance_lines(cfg, cfg.noise_seed))
    print(
        f"{cfg.name}: P_a={out.metrics.P_a_W:.6g} W P_p={out.metrics.P_p_W:.6g} W "
        f"amplitude={out.amplitude_m * 1e3:.6g} mm drive={out.pwm.amplitude_volts:.6g} V -> {path}"
    )
    return EXIT_OK


def _parse_pairs(text: str):
    pairs = []
    try:
        for item in text.split(","):
            f, d = item.split(":")
            pairs.append((float(f), float(d)))
    except ValueError:
        raise UsageError(f"--pairs: expected 'f:duty,...', got {text!r}") from None
    return pairs


def cmd_campaign(args) -> int:
    from .campaign import report, run_campaign
    from .presets import PROTOCOL_PAIRS

    if not args.config:
        raise UsageError("--config is required")
    cli_pairs = _parse_pairs(args.pairs) if args.pairs else None
    merged = None
    for path in args.config:
        cfg, doc_pairs = _load_scenario(path, with_pairs=True)
        pairs = cli_pairs or doc_pairs or PROTOCOL_PAIRS
        changes = {}
        if args.seed is not None:
            changes["noise_seed"] = args.seed
        if args.repeats is not None:
            changes["repeats"] = args.repeats
        cfg = replace(cfg, **changes)
        result = run_campaign(cfg, pairs, threads=args.threads)
        merged = result if merged is None else merged.merge(result, force=args.force)
        skip = cfg.skip_s
    written = report(merged, args.out, skip_s=skip)
    for row in merged.rows:
        print(
            f"{row.medium} f={row.f_hz:g} Hz DC={row.duty_pct:g} %: "
            f"P_a={row.P_a.mean:.6g}±{row.P_a.esd:.3g} W P_p={row.P_p.mean:.6g}±{row.P_p.esd:.3g} W "
            f"amp={row.amplitude.mean * 1e3:.4g} mm"
        )
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def cmd_dataset(args) -> int:
    from .sysid import synthetic_sensor_dataset, write_dataset_csv

    kwargs = {}
    if args.config is not None:
        from .scenario import load_json

        kwargs = load_json(args.config)
        if not isinstance(kwargs, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
    kwargs.setdefault("gain", args.gain)
    kwargs.setdefault("snr_db", args.snr_db)
    if args.seed is not None:
        kwargs["seed"] = args.seed
    try:
        data = synthetic_sensor_dataset(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"dataset options: {exc}") from None
    path = _mkdir(args.out) / "sensor_dataset.csv"
    write_dataset_csv(data, path)
    print(f"wrote {len(data)} samples at {data.sample_rate_hz:g} Hz -> {path}")
    return EXIT_OK


def cmd_identify(args) -> int:
    from .sysid import (
        excitation_bandwidth,
        fit_fir_ls,
        fit_iir_ls,
        frequency_response,
        read_dataset_csv,
        save_model,
        static_gain,
    )

    opts = {"kind": "both", "order": 100, "fir_order": 256, "floor_fraction": 0.1, "n_freqs": 500}
    if args.config is not None:
        from .scenario import load_json

        doc = load_json(args.config)
        unknown = set(doc) - set(opts) if isinstance(doc, dict) else {"<not an object>"}
        if unknown:
            raise ConfigError(f"{args.config}: unknown identify options {sorted(unknown)}")
        opts.update(doc)
    for key in ("kind", "order", "fir_order"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    data = read_dataset_csv(args.dataset)
    valid = excitation_bandwidth(data.input, opts["floor_fraction"])
    nyq = data.sample_rate_hz / 2
    freqs = np.linspace(0.0, nyq, int(opts["n_freqs"]), endpoint=False)
    out = _mkdir(args.out)
    fits = []
    if opts["kind"] in ("iir", "both"):
        fits.append(("iir", fit_iir_ls(data, int(opts["order"]))))
    if opts["kind"] in ("fir", "both"):
        fits.append(("fir", fit_fir_ls(data, int(opts["fir_order"]))))
    for name, model in fits:
        save_model(model, out / f"model_{name}.json")
        frequency_response(model, freqs, valid).to_csv(out / f"bode_{name}.csv")
        print(f"{name}: static gain {static_gain(model):.6g}, valid below {valid:.6g} Hz -> {out / f'model_{name}.json'}")
    return EXIT_OK


def _write_calibration(out: Path, tag: str, problem, result) -> None:
    (out / f"{tag}_problem.json").write_text(json.dumps(problem.to_dict(), indent=2) + "\n", encoding="utf-8")
    (out / f"{tag}_result.json").write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    (out / f"{tag}_convergence.csv").write_text(result.history_csv(), encoding="utf-8", newline="")
    params = ", ".join(f"{k}={v:.6g}" for k, v in result.params.items())
    print(f"{tag}: {result.status} after {result.evals} evaluations, residual {result.residual:.4g} ({params})")


def _write_scenarios(out: Path, scenarios: dict) -> None:
    for name, cfg in scenarios.items():
        doc = cfg.to_dict()
        if cfg.plant.chamber is not None:
            # the chamber experiment has a single, assumed operating point
            doc["pairs"] = [[cfg.drive.frequency_hz, cfg.drive.duty_fraction]]
        (out / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def cmd_calibrate(args) -> int:
    from .calibration import apply_result, calibrate, load_problem

    out = _mkdir(args.out)
    if args.preset == "reference":
        if args.config is not None:
            raise UsageError("--preset and --config are mutually exclusive")
        from .presets import calibrate_reference_models

        fit = calibrate_reference_models(max_evals=args.max_evals or 300, seed=args.seed or 0)
        for tag in ("open_media", "chamber"):
            _write_calibration(out, tag, fit["problems"][tag], fit["results"][tag])
        _write_scenarios(out, fit["scenarios"])
        print(f"calibrated scenarios: {', '.join(sorted(fit['scenarios']))} -> {out}")
        return EXIT_OK
    if args.config is None:
        raise UsageError("--config or --preset is required")
    problem = load_problem(args.config)
    if args.seed is not None:
        problem = replace(problem, seed=args.seed)
    if args.max_evals is not None:
        problem = replace(problem, max_evals=args.max_evals)
    result = calibrate(problem)
    _write_calibration(out, "calibration", problem, result)
    _write_scenarios(out, apply_result(problem, result))
    return EXIT_OK


def cmd_compare(args) -> int:
    from .campaign import compare, format_comparison, read_campaign_csv

    rows = compare(read_campaign_csv(args.base), read_campaign_csv(args.new), force=args.force)
    text = format_comparison(rows)
    sys.stdout.write(text)
    if args.out is not None:
        (_mkdir(args.out) / "compare.csv").write_text(text, encoding="utf-8", newline="")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "campaign": cmd_campaign,
    "identify": cmd_identify,
    "dataset": cmd_dataset,
    "calibrate": cmd_calibrate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"sma-sim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="sma-sim: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"sma-sim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"sma-sim: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SmaSimError, OSError, ValueError, ArithmeticError) as exc:
        print(f"sma-sim: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
