"""Command-line entry point.

Subcommands wire the library into reproducible pipelines:

  simulate   seeded synthetic experiment -> CSV dataset
  analyze    trajectory CSV -> per-trial outcomes + summary
  fit        outcomes CSV -> offset-model fits and model comparison
  transform  OBJ mesh or point CSV -> depth-corrected copy
  predict    closed-form endpoint-error curve -> CSV

Unit conventions at this surface: angles in degrees, interpupillary
distances and speeds in millimeters, reach/viewing distances in meters.
Files exchanged between subcommands are strictly SI.  Every run writes a
manifest echoing the resolved configuration, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .correction import predicted_correction_curve, transform_mesh, transform_point
from .errors import DataFormatError, DomainError, FitError
from .fitting import (
    DEFAULT_BETA_BOUNDS,
    DEFAULT_IPD_BOUNDS,
    VARIANTS,
    FitDataset,
    ModelSpec,
    compare_models_detailed,
    fit as fit_model,
    write_comparison_csv,
    write_fit_json,
)
from .geometry import EyeGeometry, ScenePoint
from .kinematics import (
    EyePose,
    TargetSpec,
    analyze_trials,
    read_trajectories_csv,
    write_outcomes_csv,
    write_summary_csv,
)
from .meshio import read_obj, read_points_csv, write_obj, write_points_csv
from .perception import PerturbationParams
from .synth import (
    SimConfig,
    generate_participants,
    generate_trajectories,
    generate_trials,
    write_dataset,
)

CONFIG_ENV_VAR = "VACKIT_CONFIG"
PREDICT_HEADER = "distance_m,original_error_m,transformed_error_m"


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 on usage errors (2 is for data errors)."""

    def error(self, message: str) -> None:  # noqa: D102 - argparse override
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(str(exc), str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(exc.msg, str(path), exc.lineno) from exc
    if not isinstance(data, dict):
        raise DataFormatError("top-level JSON value must be an object", str(path))
    return data


def _reject_unknown(data: dict, known: set[str], context: str) -> None:
    unknown = sorted(set(data) - known)
    if unknown:
        raise DomainError(f"unknown {context} field(s): {', '.join(unknown)}")


def _eye_pose_from_dict(data: dict) -> EyePose:
    _reject_unknown(data, {"behind_m", "above_m", "lateral_m"}, "eye_pose")
    return EyePose(
        behind_m=float(data.get("behind_m", 0.30)),
        above_m=float(data.get("above_m", 0.35)),
        lateral_m=float(data.get("lateral_m", 0.0)),
    )


_SIM_KEYS = {
    "n_participants", "seed", "condition", "feedback", "ipd_distribution",
    "repetitions", "ipd_low_mm", "ipd_high_mm", "ipd_mean_mm", "ipd_sd_mm",
    "beta_deg", "motor_noise_sd_mm", "trajectory_noise_sd_mm",
    "reach_distances_m", "movement_duration_s", "sample_rate_hz",
    "rest_padding_s", "feedforward_variance_factor", "response_mixture",
    "eye_pose", "write_trajectories",
}


def _sim_config_from_dict(data: dict) -> tuple[SimConfig, bool]:
    """Translate a surface-unit config JSON into a SimConfig.

    Returns the config plus whether trajectories should be written.
    """
    _reject_unknown(data, _SIM_KEYS, "simulate config")
    defaults = SimConfig()
    kwargs: dict = {}

    def take(key: str, attr: str, conv) -> None:
        if key in data:
            kwargs[attr] = conv(data[key])

    take("n_participants", "n_participants", int)
    take("seed", "seed", int)
    take("condition", "condition", str)
    take("feedback", "feedback", str)
    take("ipd_distribution", "ipd_distribution", str)
    take("repetitions", "repetitions", int)
    take("ipd_low_mm", "ipd_low", lambda v: float(v) / 1000.0)
    take("ipd_high_mm", "ipd_high", lambda v: float(v) / 1000.0)
    take("ipd_mean_mm", "ipd_mean", lambda v: float(v) / 1000.0)
    take("ipd_sd_mm", "ipd_sd", lambda v: float(v) / 1000.0)
    take("beta_deg", "beta", lambda v: math.radians(float(v)))
    take("motor_noise_sd_mm", "motor_noise_sd", lambda v: float(v) / 1000.0)
    take("trajectory_noise_sd_mm", "trajectory_noise_sd",
         lambda v: float(v) / 1000.0)
    take("reach_distances_m", "reach_distances",
         lambda v: tuple(float(x) for x in v))
    take("movement_duration_s", "movement_duration", float)
    take("sample_rate_hz", "sample_rate", float)
    take("rest_padding_s", "rest_padding", float)
    take("feedforward_variance_factor", "feedforward_variance_factor", float)
    if "response_mixture" in data:
        value = data["response_mixture"]
        kwargs["response_mixture"] = None if value is None \
            else tuple(float(x) for x in value)
    if "eye_pose" in data:
        kwargs["eye_pose"] = _eye_pose_from_dict(data["eye_pose"])
    config = replace(defaults, **kwargs) if kwargs else defaults
    return config, bool(data.get("write_trajectories", True))


def _default_config_path(explicit: str | None) -> str | None:
    if explicit is not None:
        return explicit
    return os.environ.get(CONFIG_ENV_VAR)


def _write_manifest(path: Path, subcommand: str, config: dict,
                    outputs: list[str]) -> None:
    manifest = {
        "tool": "vackit",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "outputs": sorted(outputs),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _cmd_simulate(args: argparse.Namespace) -> int:
    config_path = _default_config_path(args.config)
    data = _load_json(config_path) if config_path else {}
    config, write_traj = _sim_config_from_dict(data)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    participants = generate_participants(config)
    trials = generate_trials(config, participants)
    trajectories = generate_trajectories(config, trials, participants) \
        if write_traj else None
    outdir = Path(args.out)
    written = write_dataset(outdir, config, participants, trials, trajectories)
    resolved = dict(data)
    resolved["seed"] = config.seed
    _write_manifest(outdir / "manifest.json", "simulate", {
        "config_file": config_path, "config": resolved, "out": str(outdir),
    }, [Path(p).name for p in written.values()])
    print(f"simulated {len(participants)} participants, {len(trials)} trials "
          f"-> {outdir}")
    return 0


def _parse_axes(text: str) -> list[tuple[str, float]]:
    """Parse an axis map like "x,y,z" or "x,-z,y" into (axis, sign) pairs."""
    tokens = [tok.strip() for tok in text.split(",")]
    axes = []
    for tok in tokens:
        sign = 1.0
        if tok.startswith("-"):
            sign, tok = -1.0, tok[1:]
        if tok not in ("x", "y", "z"):
            raise DomainError(f"--axes entries must be x, y or z, got {tok!r}")
        axes.append((tok, sign))
    if len(axes) != 3 or len({a for a, _ in axes}) != 3:
        raise DomainError(f"--axes must name each of x, y, z once, got {text!r}")
    return axes


def _targets_from_json(data: dict) -> dict[str, TargetSpec]:
    known = {"reach_m", "participant_id", "condition", "x_m", "y_m",
             "go_cue_time_s", "ipd_m"}
    targets = {}
    for trial_id, entry in data.items():
        if not isinstance(entry, dict) or "reach_m" not in entry:
            raise DomainError(f"target entry {trial_id!r} needs a reach_m field")
        _reject_unknown(entry, known, f"target {trial_id!r}")
        targets[trial_id] = TargetSpec(
            trial_id=trial_id,
            reach_m=float(entry["reach_m"]),
            participant_id=str(entry.get("participant_id", "")),
            condition=str(entry.get("condition", "")),
            x_m=float(entry.get("x_m", 0.0)),
            y_m=float(entry.get("y_m", 0.0)),
            go_cue_time_s=(None if entry.get("go_cue_time_s") is None
                           else float(entry["go_cue_time_s"])),
            ipd_m=(None if entry.get("ipd_m") is None
                   else float(entry["ipd_m"])),
        )
    return targets


def _cmd_analyze(args: argparse.Namespace) -> int:
    pose_data = _load_json(args.eye_pose)
    _reject_unknown(pose_data, {"behind_m", "above_m", "lateral_m", "ipd_mm"},
                    "eye-pose")
    if "ipd_mm" not in pose_data:
        raise DomainError("eye-pose file needs an ipd_mm field")
    eyes = EyeGeometry(ipd=float(pose_data["ipd_mm"]) / 1000.0)
    pose = _eye_pose_from_dict(
        {k: v for k, v in pose_data.items() if k != "ipd_mm"})
    targets = _targets_from_json(_load_json(args.targets))
    trajectories, rejected = read_trajectories_csv(args.input)
    if args.axes != "x,y,z":
        axes = _parse_axes(args.axes)
        remapped = []
        for traj in trajectories:
            cols = dict(zip("xyz", [traj.x, traj.y, traj.z]))
            x, y, z = (sign * cols[axis] for axis, sign in axes)
            remapped.append(replace(traj, x=x, y=y, z=z))
        trajectories = remapped
    threshold = args.threshold_mmps / 1000.0
    analyzed = analyze_trials(trajectories, targets, eyes, pose,
                              cutoff=args.cutoff_hz, threshold=threshold)
    from .kinematics import AnalyzedTrial

    for outcome in rejected:
        target = targets.get(
            outcome.trial_id,
            TargetSpec(trial_id=outcome.trial_id, reach_m=float("nan")),
        )
        analyzed.append(AnalyzedTrial(target=target, outcome=outcome))
    analyzed.sort(key=lambda item: item.outcome.trial_id)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_outcomes_csv(analyzed, outdir / "outcomes.csv")
    write_summary_csv(analyzed, outdir / "summary.csv")
    _write_manifest(outdir / "manifest.json", "analyze", {
        "input": args.input, "targets": args.targets, "eye_pose": args.eye_pose,
        "cutoff_hz": args.cutoff_hz, "threshold_mmps": args.threshold_mmps,
        "axes": args.axes, "out": str(outdir),
    }, ["outcomes.csv", "summary.csv"])
    n_valid = sum(1 for item in analyzed if item.outcome.valid)
    print(f"analyzed {len(analyzed)} trials ({n_valid} valid) -> {outdir}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    config_path = _default_config_path(args.config)
    data = _load_json(config_path) if config_path else {}
    _reject_unknown(data, {"ipd_bounds_mm", "beta_bounds_deg", "eye_pose"},
                    "fit config")
    ipd_bounds = DEFAULT_IPD_BOUNDS
    if "ipd_bounds_mm" in data:
        lo, hi = (float(v) for v in data["ipd_bounds_mm"])
        ipd_bounds = (lo / 1000.0, hi / 1000.0)
    beta_bounds = DEFAULT_BETA_BOUNDS
    if "beta_bounds_deg" in data:
        lo, hi = (float(v) for v in data["beta_bounds_deg"])
        beta_bounds = (math.radians(lo), math.radians(hi))
    eye_pose = _eye_pose_from_dict(data.get("eye_pose", {}))
    dataset = FitDataset.from_csv(args.input)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []
    if args.variant == "both":
        rows, results = compare_models_detailed(
            dataset, eye_pose, ipd_bounds, beta_bounds,
            train_fraction=args.split, split_seed=args.seed)
        write_comparison_csv(rows, outdir / "comparison.csv")
        outputs.append("comparison.csv")
        for (condition, variant), result in sorted(results.items()):
            name = f"fit_{condition}_{variant}.json"
            write_fit_json(result, outdir / name)
            outputs.append(name)
        for row in rows:
            if row.selected:
                print(f"condition {row.condition}: selected {row.variant} "
                      f"(test BIC {row.bic_test:.1f})")
    else:
        spec = ModelSpec(variant=args.variant, eye_pose=eye_pose,
                         ipd_bounds=ipd_bounds, beta_bounds=beta_bounds)
        for condition in dataset.conditions:
            subset = dataset.select_condition(condition)
            result = fit_model(subset, spec, train_fraction=args.split,
                               split_seed=args.seed)
            name = f"fit_{condition}_{args.variant}.json"
            write_fit_json(result, outdir / name)
            outputs.append(name)
            print(f"condition {condition}: beta = "
                  f"{math.degrees(result.beta):+.4f} deg "
                  f"(test r2 {result.test.r2:.3f})")
    _write_manifest(outdir / "manifest.json", "fit", {
        "input": args.input, "config_file": config_path, "config": data,
        "variant": args.variant, "split": args.split, "seed": args.seed,
        "out": str(outdir),
    }, outputs)
    return 0


def _cmd_transform(args: argparse.Namespace) -> int:
    eyes = EyeGeometry(ipd=args.ipd_mm / 1000.0)
    params = PerturbationParams(beta_offset=math.radians(args.beta_deg))
    in_path = Path(args.input)
    out_path = Path(args.out)
    suffix = in_path.suffix.lower()
    if suffix == ".obj":
        mesh = read_obj(in_path)
        if args.compat_literal_half_angle:
            vertices = np.array([
                _transform_vertex_literal(vertex, eyes, params)
                for vertex in mesh.vertices
            ])
            mesh = replace(mesh, vertices=vertices)
        else:
            mesh = transform_mesh(mesh, eyes, params)
        write_obj(mesh, out_path)
        n = len(mesh.vertices)
    elif suffix == ".csv":
        points = read_points_csv(in_path)
        if args.compat_literal_half_angle:
            out = np.array([
                _transform_vertex_literal(row, eyes, params) for row in points
            ])
        else:
            from . import backends

            out, first_bad = backends.remap_points(points, eyes.half_ipd,
                                                   params.beta_offset)
            if first_bad >= 0:
                x, y, z = points[first_bad]
                raise DomainError(
                    f"point {first_bad} at ({x}, {y}, {z}) cannot be corrected"
                )
        write_points_csv(out, out_path)
        n = len(out)
    else:
        raise DomainError(
            f"--in must be an .obj or .csv file, got {in_path.name!r}"
        )
    _write_manifest(Path(str(out_path) + ".manifest.json"), "transform", {
        "in": str(in_path), "out": str(out_path), "beta_deg": args.beta_deg,
        "ipd_mm": args.ipd_mm,
        "compat_literal_half_angle": args.compat_literal_half_angle,
    }, [out_path.name])
    print(f"transformed {n} points -> {out_path}")
    return 0


def _transform_vertex_literal(row: np.ndarray, eyes: EyeGeometry,
                              params: PerturbationParams) -> tuple:
    point = transform_point(ScenePoint(float(row[0]), float(row[1]),
                                       float(row[2])),
                            eyes, params, literal_half_angle=True)
    return (point.x, point.y, point.z)


def _parse_distances(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise DomainError(f"--distances must be comma-separated meters, got "
                          f"{text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise DomainError(f"--distances must be positive meters, got {text!r}")
    return values


def _cmd_predict(args: argparse.Namespace) -> int:
    eyes = EyeGeometry(ipd=args.ipd_mm / 1000.0)
    params = PerturbationParams(beta_offset=math.radians(args.beta_deg))
    distances = _parse_distances(args.distances)
    rows = predicted_correction_curve(distances, eyes, params)
    out_path = Path(args.out)
    lines = [PREDICT_HEADER]
    for row in rows:
        lines.append(f"{row.distance!r},{row.original_error!r},"
                     f"{row.transformed_error!r}")
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(Path(str(out_path) + ".manifest.json"), "predict", {
        "beta_deg": args.beta_deg, "ipd_mm": args.ipd_mm,
        "distances": args.distances, "out": str(out_path),
    }, [out_path.name])
    for row in rows:
        print(f"{row.distance:.3f} m: original {row.original_error * 1000:+.2f} mm, "
              f"transformed {row.transformed_error * 1000:+.2f} mm")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vackit",
                     description="Binocular distance-distortion toolkit")
    parser.add_argument("--version", action="version",
                        version=f"vackit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic experiment")
    p.add_argument("--config", help=f"config JSON (default: ${CONFIG_ENV_VAR})")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="analyze reaching trajectories")
    p.add_argument("--input", required=True, help="trajectory CSV")
    p.add_argument("--targets", required=True, help="per-trial target JSON")
    p.add_argument("--eye-pose", required=True,
                   help="eye pose + ipd_mm JSON")
    p.add_argument("--cutoff-hz", type=float, default=10.0)
    p.add_argument("--threshold-mmps", type=float, default=50.0)
    p.add_argument("--axes", default="x,y,z",
                   help="axis map for foreign data, e.g. x,-z,y")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("fit", help="fit offset models to outcome data")
    p.add_argument("--input", required=True, help="outcomes CSV")
    p.add_argument("--variant", choices=(*VARIANTS, "both"), default="both")
    p.add_argument("--split", type=float, default=0.7,
                   help="train fraction")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--config",
                   help=f"bounds/eye-pose JSON (default: ${CONFIG_ENV_VAR})")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("transform", help="depth-correct a mesh or point list")
    p.add_argument("--in", dest="input", required=True,
                   help="input .obj or .csv")
    p.add_argument("--out", required=True, help="output file")
    p.add_argument("--beta-deg", type=float, required=True)
    p.add_argument("--ipd-mm", type=float, required=True)
    p.add_argument("--compat-literal-half-angle", action="store_true",
                   help="apply the offset to the half angle (no inverse "
                        "guarantee; comparison only)")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("predict", help="predicted endpoint-error curve")
    p.add_argument("--beta-deg", type=float, required=True)
    p.add_argument("--ipd-mm", type=float, required=True)
    p.add_argument("--distances", required=True,
                   help="comma-separated meters, e.g. 0.45,0.50,0.55")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=_cmd_predict)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"vackit: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"vackit: data error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, FitError, ValueError) as exc:
        print(f"vackit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
