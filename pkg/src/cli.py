#!/usr/bin/env python3
"""
Command line for the NV pulse simulator.

    python src/cli.py calibrate --config nvnv-natural
    python src/cli.py run --config nuclear-sdid --shots 2000
    python src/cli.py tomo --counts output/nuclear-sdid/counts.csv --out output/retomo
    python src/cli.py diagnose --rho output/nuclear-sdid/rho
    python src/cli.py sweep --config nuclear-sdid --parameter j_khz --values 0 25 50

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from services.calibration import calibrate
from services.diagnostics import diagnose, fit_coherence_decay
from services.exceptions import CalibrationError, ConfigError, FitError, NumericalError
from services.export import export, load_rho, read_json, sweep_frame, write_csv, write_json
from services.fitting import MODELS
from services.hamiltonian import TWO_PI
from services.harness import SWEEP_PARAMETERS, ExperimentConfig, load_document, run_experiment, run_sweep
from services.presets import preset_names
from services.tomography import reconstruct, records_from_csv
from utils.settings import Settings, configure_logging, load_settings

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help=f"Preset name ({', '.join(preset_names())}) or path to a JSON config")
    shared.add_argument("--seed", type=int, help="Override the config seed")
    shared.add_argument("--shots", type=int, help="Override shots per measurement setting")
    shared.add_argument("--out", help="Output directory")
    shared.add_argument("--format", choices=["csv", "json"], help="Table output format")
    shared.add_argument("--exact", action="store_true", help="Use exact expectations instead of sampling")
    shared.add_argument("--workers", type=int, help="Worker processes for delays and sweep points")
    return shared


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Pulse-level NV-centre simulator")
    parser.add_argument("--log-level", help="Logging level (defaults to LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()

    sub.add_parser("calibrate", parents=[shared], help="Spectroscopy, Rabi, readout and Ramsey calibration")
    sub.add_parser("run", parents=[shared], help="Run an experiment over its delays")

    tomo = sub.add_parser("tomo", parents=[shared], help="Reconstruct density matrices from a counts CSV")
    tomo.add_argument("--counts", required=True, help="CSV with delay_s,setting,n00,n01,n10,n11,shots")

    diag = sub.add_parser("diagnose", parents=[shared], help="Diagnostics for exported density matrices")
    diag.add_argument("--rho", nargs="+", required=True, help="rho-v1 JSON files or directories of them")
    diag.add_argument("--use-raw", action="store_true", help="Diagnose the unprojected matrices")
    diag.add_argument("--coherence-model", default="auto", choices=["auto", "exponential", "exp_cos"])

    sweep = sub.add_parser("sweep", parents=[shared], help="Repeat an experiment over a system parameter")
    sweep.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    sweep.add_argument("--values", type=float, nargs="+", required=True)
    return parser


def load_experiment(args: argparse.Namespace, settings: Settings) -> ExperimentConfig:
    """Config document with environment defaults filled in and CLI flags applied."""
    if not args.config:
        raise ConfigError("--config", "a preset name or config path is required")
    doc = load_document(args.config)
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    doc.setdefault("seed", settings.seed)
    doc.setdefault("shots", settings.shots)
    doc.setdefault("workers", settings.workers)
    if isinstance(doc.get("integrator", {}), dict):
        doc.setdefault("integrator", {}).setdefault("dt_ns", settings.dt_ns)
    if isinstance(doc.get("outputs", {}), dict):
        doc.setdefault("outputs", {}).setdefault("dir", str(Path(settings.output_dir) / doc.get("name", "experiment")))
    cfg = ExperimentConfig.from_dict(doc)
    return cfg.with_overrides(
        seed=args.seed,
        shots=args.shots,
        out=args.out,
        format=args.format,
        exact=True if args.exact else None,
        workers=args.workers,
    )


def cmd_calibrate(args: argparse.Namespace, settings: Settings) -> int:
    cfg = load_experiment(args, settings)
    out = Path(cfg.output_dir)
    report = calibrate(cfg.spec, cfg.calibration)
    write_json(out / "calibration.json", report.to_dict())
    for q in report.qubits:
        for step, data in q.sweeps.items():
            fit = q.fits[step]
            write_csv(out / f"calibration_q{q.qubit}_{step}.csv", sweep_frame(data, fit, MODELS[fit.model]))

    # calibrated values written back so `run --config` can pick them up
    doc = dict(cfg.document)
    system = dict(doc["system"])
    system["detuning_mhz"] = [d / (TWO_PI * 1e6) for d in report.spec.detunings]
    system["pi_amplitude_au"] = list(report.spec.pi_amplitudes)
    system["drive_frequency_ghz"] = [f * 1e-9 for f in report.spec.drive_frequencies_hz]
    system["rabi_rate_rad_per_us_per_au"] = report.spec.rabi_rate_per_amp * 1e-6
    doc["system"] = system
    doc["outputs"] = {k: v for k, v in doc.get("outputs", {}).items() if k != "dir"}
    write_json(out / "calibrated_config.json", doc)

    for q in report.qubits:
        print(f"qubit {q.qubit}: f = {q.frequency_hz / 1e9:.6f} GHz, "
              f"pi amplitude = {q.pi_amplitude:.5f} a.u., "
              f"residual detuning = {q.residual_detuning_hz / 1e3:.2f} kHz, "
              f"assignment fidelity = {q.assignment_fidelity:.4f}")
    print(f"Calibration written to {out}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    cfg = load_experiment(args, settings)
    manifest = run_experiment(cfg)
    rows = manifest.rows
    entangled = [r.delay_s for r in rows if r.entangled]
    print(f"{cfg.name}: {len(rows)} delays, config hash {manifest.config_hash[:12]}")
    print(f"min ppt = {min(r.ppt_min for r in rows):.4f}, max |S| = {max(r.chsh_max for r in rows):.4f}, "
          f"entangled at {len(entangled)} delays")
    if manifest.coherence is not None:
        c = manifest.coherence
        reference = f" (reference {cfg.reference_t2_us:.2f} us)" if cfg.reference_t2_us else ""
        print(f"sensor T2 = {c.t2_s * 1e6:.2f} us [{c.model}]{reference}")
        if c.model == "exp_cos":
            print(f"oscillation frequency = {c.oscillation_freq_hz / 1e3:.2f} kHz")
    print(f"Outputs written to {manifest.output_dir}")
    return EXIT_OK


def cmd_tomo(args: argparse.Namespace, settings: Settings) -> int:
    out = Path(args.out or settings.output_dir)
    fmt = args.format or "csv"
    use_raw = False
    if args.config:
        use_raw = load_experiment(args, settings).use_raw
    records = records_from_csv(args.counts)
    rows = []
    for i, record in enumerate(records):
        result = reconstruct(record)
        export(result, out / "rho" / f"rho_{i:04d}", "json")
        shots = min(t.shots for t in record.counts.values())
        rows.append(diagnose(result.state(use_raw), record.delay_s, shots))
    export(rows, out / "diagnostics", fmt)
    print(f"Reconstructed {len(records)} states into {out}")
    return EXIT_OK


def _rho_paths(sources: List[str]) -> List[Path]:
    paths = []
    for source in sources:
        p = Path(source)
        paths.extend(sorted(p.glob("rho_*.json")) if p.is_dir() else [p])
    if not paths:
        raise ConfigError("--rho", "no rho-v1 files found")
    return paths


def cmd_diagnose(args: argparse.Namespace, settings: Settings) -> int:
    out = Path(args.out or settings.output_dir)
    fmt = args.format or "csv"
    docs = sorted(((p, read_json(p)) for p in _rho_paths(args.rho)), key=lambda item: item[1].get("delay_s", 0.0))
    rows = [diagnose(load_rho(p, use_raw=args.use_raw), doc.get("delay_s", 0.0), args.shots) for p, doc in docs]
    written = export(rows, out / "diagnostics", fmt)
    if len(rows) >= 8:
        # sensor excited population from the stored <ZI>
        p1 = [0.5 * (1.0 - doc["pauli"]["ZI"]) for _, doc in docs]
        fit = fit_coherence_decay([r.delay_s for r in rows], p1, args.coherence_model)
        write_json(out / "coherence_fit.json", {"schema": "coherence-fit-v1", **fit.to_dict()})
        print(f"sensor T2 = {fit.t2_s * 1e6:.2f} us [{fit.model}] against delay")
    print(f"Diagnosed {len(rows)} states: {written[0]}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    cfg = load_experiment(args, settings)
    sweep = run_sweep(cfg, args.parameter, args.values)
    print(sweep.summary.to_string(index=False))
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "run": cmd_run,
    "tomo": cmd_tomo,
    "diagnose": cmd_diagnose,
    "sweep": cmd_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    settings = load_settings()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or settings.log_level)
    try:
        return COMMANDS[args.command](args, settings)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except (NumericalError, FitError, CalibrationError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
