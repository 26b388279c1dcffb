"""Command-line front door: sweeps, radar heatmaps, single-point evaluation.

Every run writes a ``run.json`` carrying the fully resolved configuration
and sha256 digests of its outputs; the ``reproduce`` subcommand re-executes
such a manifest and asserts the digests match. All internal math is linear;
decibels appear only in serialized output.

Exit codes: 0 success, 2 configuration or I/O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys

import numpy as np

from .calibration import (
    RfImpairment,
    anchor_channels,
    apply_phase_correction,
    estimate_phase_correction,
)
from .core import (
    ArrayGeometry,
    ConfigError,
    DegenerateChannelError,
    RngStream,
    ScenarioConfig,
    generate_channels,
    scenario_preset,
)
from .precoders import (
    DegenerateDirectionError,
    ParameterPoint,
    RankDeficientChannelError,
    build_precoders,
    classify_special_case,
)
from .radar import (
    UndefinedProfileError,
    ZeroInformationError,
    expected_steered_power,
    range_profile,
    synthesize_tx,
    two_stage_capture,
    _crb_from_power,
)
from .region import (
    SweepSpec,
    boundary_params,
    round_sig,
    sweep,
    write_boundary_params_csv,
    write_points_csv,
)
from .throughput import sinr_common, sinr_private, spectral_efficiency, throughput

_GEOM = ArrayGeometry(n_tx=2, spacing_wavelengths=0.5)


class ReproduceMismatchError(ArithmeticError):
    """Re-executed run produced outputs with different digests."""


_NUMERIC_ERRORS = (
    DegenerateChannelError,
    DegenerateDirectionError,
    RankDeficientChannelError,
    UndefinedProfileError,
    ZeroInformationError,
    FloatingPointError,
    ReproduceMismatchError,
)

_SCENARIO_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_SWEEP_FIELDS = {"grid_step", "families", "metric", "include_cases", "monte_carlo_trials"}
_POINT_FIELDS = ("t_comms", "t_p", "alpha_c", "alpha_p")


def _fail(code: int, exc: BaseException) -> int:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(payload), file=sys.stderr)
    return code


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _split_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        out[key.strip()] = _parse_value(raw.strip())
    return out


def _resolve_scenario(args, overrides: dict) -> ScenarioConfig:
    if getattr(args, "scenario", None):
        with open(args.scenario, encoding="utf-8") as fh:
            cfg = ScenarioConfig.from_json(fh.read())
    else:
        cfg = scenario_preset(getattr(args, "preset", None) or "S1")
    updates = {k: v for k, v in overrides.items() if k in _SCENARIO_FIELDS}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if updates:
        merged = cfg.to_json_dict()
        for key, value in updates.items():
            if isinstance(value, list):
                value = tuple(value)
            merged[key] = value
        cfg = ScenarioConfig.from_json_dict(merged)
    unknown = set(overrides) - set(_SCENARIO_FIELDS) - _SWEEP_FIELDS - set(_POINT_FIELDS)
    if unknown:
        raise ConfigError(f"unknown override keys: {sorted(unknown)}")
    return cfg


def _family_tuple(arg: str) -> tuple[str, ...]:
    table = {"mrt": ("MRT",), "zf": ("ZF",), "both": ("MRT", "ZF")}
    if arg.lower() not in table:
        raise ConfigError(f"--family must be mrt, zf or both, got {arg!r}")
    return table[arg.lower()]


def _resolve_sweep_spec(args, overrides: dict) -> SweepSpec:
    fields = {
        "grid_step": args.step,
        "families": _family_tuple(args.family),
        "metric": {"g0": "G0", "snr": "SNR_RAD"}[args.metric],
        "monte_carlo_trials": args.trials,
    }
    for key in _SWEEP_FIELDS & set(overrides):
        value = overrides[key]
        if key == "families":
            value = tuple(value) if isinstance(value, list) else _family_tuple(str(value))
        if key == "include_cases" and isinstance(value, list):
            value = frozenset(value)
        fields[key] = value
    return SweepSpec(**fields)


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(out_dir: str, command: str, cfg: ScenarioConfig,
                    extra: dict, filenames: list[str]) -> None:
    manifest = {
        "command": command,
        "scenario": cfg.to_json_dict(),
        "outputs": {name: _digest(os.path.join(out_dir, name)) for name in filenames},
    }
    manifest.update(extra)
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _ensure_out(args) -> str:
    out = args.out
    os.makedirs(out, exist_ok=True)
    return out


def _run_sweep_resolved(cfg: ScenarioConfig, spec: SweepSpec, out_dir: str) -> None:
    channels = generate_channels(cfg, _GEOM, RngStream(cfg.seed, 0))
    result = sweep(spec, channels, cfg, geom=_GEOM)
    if not result.points:
        raise RankDeficientChannelError(
            "every grid point was skipped; no region to report"
        )
    write_points_csv(result.points, os.path.join(out_dir, "points.csv"))
    write_points_csv(result.boundary, os.path.join(out_dir, "boundary.csv"))
    rows = boundary_params(result)
    write_boundary_params_csv(rows, os.path.join(out_dir, "boundary_params.csv"))


def cmd_sweep(args) -> int:
    overrides = _split_overrides(args.set or [])
    cfg = _resolve_scenario(args, overrides)
    spec = _resolve_sweep_spec(args, overrides)
    out_dir = _ensure_out(args)
    _run_sweep_resolved(cfg, spec, out_dir)
    _write_manifest(
        out_dir,
        "sweep",
        cfg,
        {"sweep": {
            "grid_step": spec.grid_step,
            "families": list(spec.families),
            "metric": spec.metric,
            "include_cases": sorted(spec.include_cases) if spec.include_cases else None,
            "monte_carlo_trials": spec.monte_carlo_trials,
        }},
        ["points.csv", "boundary.csv", "boundary_params.csv"],
    )
    return 0


def _parse_params_csv(path: str, family: str) -> list[tuple[int, ParameterPoint]]:
    """Read boundary_params.csv rows back into ParameterPoints.

    Dashed entries are the pinned values the sweep collapsed away:
    no communications power pins everything downstream, t_p = 1 pins
    alpha_c, t_p = 0 pins alpha_p.
    """
    rows: list[tuple[int, ParameterPoint]] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        idx = {name: i for i, name in enumerate(header)}
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) < 5:
                continue

            def cell(name: str, pinned: float) -> float:
                raw = cells[idx[name]]
                return pinned if raw == "-" else float(raw)

            t = float(cells[idx["t_comms"]])
            tp = cell("t_p", 1.0)
            ac = cell("alpha_c", 1.0)
            ap = cell("alpha_p", 1.0)
            rows.append(
                (int(cells[idx["index"]]), ParameterPoint(t, tp, ac, ap, family))
            )
    return rows


def _run_heatmap_resolved(
    cfg: ScenarioConfig,
    rows: list[tuple[int, ParameterPoint]],
    n0_values: list[int],
    trials: int,
    beta0: float,
    beta_decay: float,
    out_dir: str,
) -> None:
    channels = generate_channels(cfg, _GEOM, RngStream(cfg.seed, 0))
    path = os.path.join(out_dir, "heatmap.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,n0,bin,snr_db,peak_correct\n")
        stream = 1
        for row_index, pp in rows:
            pset = build_precoders(pp, channels, cfg)
            for j, n0 in enumerate(n0_values):
                beta = beta0 * beta_decay**j
                peaks = []
                snr_sum = 0.0
                for _ in range(trials):
                    tx = synthesize_tx(pset, RngStream(cfg.seed, stream))
                    obs = two_stage_capture(
                        tx, n0, beta, cfg.noise_power_radar,
                        RngStream(cfg.seed, stream + 1),
                        RngStream(cfg.seed, stream + 2),
                        geom=_GEOM, angle_deg=cfg.target_angle_deg,
                    )
                    stream += 3
                    prof = range_profile(obs, tx, geom=_GEOM, angle_deg=cfg.target_angle_deg)
                    peaks.append(prof.peak_bin)
                    snr_sum += 10.0 ** (prof.snr_rad_db / 10.0)
                if trials == 0:
                    continue
                counts = np.bincount(peaks)
                modal = int(np.argmax(counts))
                correct = sum(1 for p in peaks if p == n0) / trials
                snr_db = 10.0 * math.log10(snr_sum / trials)
                fh.write(f"{row_index},{n0},{modal},{snr_db:.6f},{correct:.6f}\n")


def cmd_radar_heatmap(args) -> int:
    overrides = _split_overrides(args.set or [])
    cfg = _resolve_scenario(args, overrides)
    if not os.path.exists(args.params):
        raise ConfigError(f"params file not found: {args.params}")
    family = args.family
    if family == "both":
        raise ConfigError("radar-heatmap needs a single family, not 'both'")
    rows = _parse_params_csv(args.params, _family_tuple(family)[0])
    n0_values = [int(v) for v in args.n0.split(",") if v.strip() != ""]
    for n0 in n0_values:
        if not 0 <= n0 < cfg.n_subcarriers:
            raise ConfigError(f"n0 value {n0} outside [0, {cfg.n_subcarriers})")
    beta0 = args.beta if args.beta is not None else cfg.target_attenuation
    out_dir = _ensure_out(args)
    _run_heatmap_resolved(
        cfg, rows, n0_values, args.trials, beta0, args.beta_decay, out_dir
    )
    _write_manifest(
        out_dir,
        "radar-heatmap",
        cfg,
        {"heatmap": {
            "params_rows": [[i, list(pp.key())] for i, pp in rows],
            "n0_values": n0_values,
            "trials": args.trials,
            "beta0": beta0,
            "beta_decay": args.beta_decay,
            "family": family,
        }},
        ["heatmap.csv"],
    )
    return 0


def _point_eval_payload(cfg: ScenarioConfig, pp: ParameterPoint) -> dict:
    channels = generate_channels(cfg, _GEOM, RngStream(cfg.seed, 0))
    pset = build_precoders(pp, channels, cfg)
    report = throughput(channels, pset, cfg)
    power = expected_steered_power(pset, _GEOM, cfg.target_angle_deg)
    g0 = round_sig(float(np.sum(power)))
    try:
        bound = _crb_from_power(power, cfg.target_attenuation, cfg.noise_power_radar)
    except ZeroInformationError:
        bound = math.inf

    def mean_db(values: np.ndarray) -> float:
        mean = float(np.mean(values))
        return 10.0 * math.log10(mean) if mean > 0 else -math.inf

    sigma2 = cfg.noise_power_comms
    return {
        "params": {
            "t_comms": pp.t_comms, "t_p": pp.t_p,
            "alpha_c": pp.alpha_c, "alpha_p": pp.alpha_p, "family": pp.family,
        },
        "case": classify_special_case(pp),
        "stream_powers": pset.stream_powers(),
        "t_common_bps": report.t_common,
        "t_private_bps": list(report.t_private),
        "t_sum_bps": report.t_sum,
        "collapsed": report.collapsed,
        "mcs_indices": [
            level.index if level is not None else None
            for level in report.mcs_chosen
        ],
        "sinr_common_mean_db": [
            mean_db(sinr_common(channels, pset, ue, sigma2)) for ue in (1, 2)
        ],
        "sinr_private_mean_db": [
            mean_db(sinr_private(channels, pset, ue, sigma2)) for ue in (1, 2)
        ],
        "spectral_efficiency_common": [
            spectral_efficiency(sinr_common(channels, pset, ue, sigma2), cfg.shannon_gap_db)
            for ue in (1, 2)
        ],
        "g0": g0,
        "crb_bins2": bound if math.isfinite(bound) else "inf",
    }


def cmd_point_eval(args) -> int:
    overrides = _split_overrides(args.set or [])
    cfg = _resolve_scenario(args, overrides)
    missing = [k for k in _POINT_FIELDS if k not in overrides]
    if missing:
        raise ConfigError(f"point-eval needs --set for: {missing}")
    if args.family == "both":
        raise ConfigError("point-eval needs a single family, not 'both'")
    pp = ParameterPoint(
        float(overrides["t_comms"]),
        float(overrides["t_p"]),
        float(overrides["alpha_c"]),
        float(overrides["alpha_p"]),
        _family_tuple(args.family)[0],
    )
    payload = _point_eval_payload(cfg, pp)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    out_dir = _ensure_out(args)
    with open(os.path.join(out_dir, "point.json"), "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    _write_manifest(
        out_dir, "point-eval", cfg,
        {"point": list(pp.key())},
        ["point.json"],
    )
    return 0


def _run_calibrate_resolved(cfg: ScenarioConfig, out_dir: str) -> dict:
    gen = RngStream(cfg.seed, 7).generator()
    # One constant phase per chain (what the pairwise correction can fix)
    # plus a little per-subcarrier ripple (what it cannot).
    base = gen.uniform(-np.pi / 2, np.pi / 2, size=(2, 1))
    ripple = gen.normal(scale=0.02, size=(2, cfg.n_subcarriers))
    offsets = np.clip(base + ripple, -np.pi + 1e-9, np.pi)
    imp = RfImpairment(offsets, anchor_delay_bins=0, anchor_angle_deg=0.0)
    anchor = anchor_channels(imp, _GEOM, beta=1.0)
    delta = estimate_phase_correction(anchor)
    aligned = apply_phase_correction(anchor, delta)

    def misalignment(grid: np.ndarray) -> float:
        return float(np.mean(np.abs(np.angle(grid[0] * np.conj(grid[1])))))

    payload = {
        "delta_phi": delta,
        "correction": -delta,
        "misalignment_before_rad": misalignment(anchor),
        "misalignment_after_rad": misalignment(aligned),
    }
    with open(os.path.join(out_dir, "calibration.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return payload


def cmd_calibrate_demo(args) -> int:
    overrides = _split_overrides(args.set or [])
    cfg = _resolve_scenario(args, overrides)
    out_dir = _ensure_out(args)
    payload = _run_calibrate_resolved(cfg, out_dir)
    print(json.dumps(payload, indent=2, sort_keys=True))
    _write_manifest(out_dir, "calibrate-demo", cfg, {}, ["calibration.json"])
    return 0


def cmd_reproduce(args) -> int:
    with open(args.run, encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg = ScenarioConfig.from_json_dict(manifest["scenario"])
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    command = manifest["command"]
    if command == "sweep":
        s = manifest["sweep"]
        spec = SweepSpec(
            grid_step=s["grid_step"],
            families=tuple(s["families"]),
            metric=s["metric"],
            include_cases=(
                frozenset(s["include_cases"]) if s.get("include_cases") else None
            ),
            monte_carlo_trials=s["monte_carlo_trials"],
        )
        _run_sweep_resolved(cfg, spec, out_dir)
    elif command == "radar-heatmap":
        h = manifest["heatmap"]
        rows = [
            (int(i), ParameterPoint(k[0], k[1], k[2], k[3], k[4]))
            for i, k in h["params_rows"]
        ]
        _run_heatmap_resolved(
            cfg, rows, [int(v) for v in h["n0_values"]],
            int(h["trials"]), float(h["beta0"]), float(h["beta_decay"]), out_dir,
        )
    elif command == "point-eval":
        k = manifest["point"]
        pp = ParameterPoint(k[0], k[1], k[2], k[3], k[4])
        payload = _point_eval_payload(cfg, pp)
        with open(os.path.join(out_dir, "point.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    elif command == "calibrate-demo":
        _run_calibrate_resolved(cfg, out_dir)
    else:
        raise ConfigError(f"manifest has unknown command {command!r}")

    expected = manifest["outputs"]
    actual = {
        name: _digest(os.path.join(out_dir, name)) for name in expected
    }
    mismatched = {
        name: {"expected": expected[name], "actual": actual[name]}
        for name in expected
        if actual[name] != expected[name]
    }
    verdict = {"status": "ok" if not mismatched else "mismatch", "files": actual}
    if mismatched:
        verdict["mismatched"] = mismatched
        print(json.dumps(verdict, indent=2, sort_keys=True))
        raise ReproduceMismatchError(
            "reproduced outputs differ from the manifest digests"
        )
    print(json.dumps(verdict, indent=2, sort_keys=True))
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="path to a scenario JSON file")
    p.add_argument("--preset", choices=["S1", "S2", "S3"], help="built-in scenario")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument(
        "--set", action="append", metavar="KEY=VALUE",
        help="override a scenario/sweep/point field (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsma-isac",
        description="Link-level trade-off simulator for a dual-function "
        "communications and sensing downlink",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="sweep the parameter grid and export the region")
    _add_common(p)
    p.add_argument("--step", type=float, default=0.1, help="grid step (1/step integer)")
    p.add_argument("--family", default="both", help="mrt, zf or both")
    p.add_argument("--metric", choices=["g0", "snr"], default="g0")
    p.add_argument("--trials", type=int, default=25, help="Monte Carlo trials (snr metric)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("radar-heatmap", help="measured radar SNR per boundary point and delay")
    _add_common(p)
    p.add_argument("--params", required=True, help="boundary_params.csv from a sweep")
    p.add_argument("--family", default="mrt", help="family the params file belongs to")
    p.add_argument("--n0", default="1,2,3", help="comma-separated delay bins")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--beta", type=float, help="echo amplitude at the first n0")
    p.add_argument(
        "--beta-decay", type=float, default=0.5,
        help="multiplicative echo decay per n0 step",
    )
    p.set_defaults(func=cmd_radar_heatmap)

    p = sub.add_parser("point-eval", help="evaluate one parameter point in depth")
    _add_common(p)
    p.add_argument("--family", default="mrt", help="mrt or zf")
    p.set_defaults(func=cmd_point_eval)

    p = sub.add_parser("calibrate-demo", help="two-chain phase calibration round trip")
    _add_common(p)
    p.set_defaults(func=cmd_calibrate_demo)

    p = sub.add_parser("reproduce", help="re-run a manifest and verify output digests")
    p.add_argument("--run", required=True, help="path to a run.json")
    p.add_argument("--out", default="out-reproduce", help="directory for the re-run")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        return _fail(3, exc)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        return _fail(2, exc)


if __name__ == "__main__":
    sys.exit(main())
