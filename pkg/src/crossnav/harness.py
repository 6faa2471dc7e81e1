"""Scenario files, batch sweeps, and trace utilities.

Scenario files are YAML with explicit units in key names (``d_safe_m``,
``tick_rate_hz``); every key is validated and unknown keys are rejected so a
typo cannot silently fall back to a default. All embedded defaults can be
inspected with ``crossnav check --print-effective``.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .arbiter import ArbiterConfig
from .human_branch import HumanSafetyParams
from .planner import ApfParams
from .sentinel import RoiSpec, SentinelConfig
from .sim import (
    Condition,
    ConfigError,
    EpisodeConfig,
    EpisodeReport,
    PerceptionSpec,
    SensorRig,
    SimParams,
    TerminationStatus,
    run_episode,
)
from .world import CameraIntrinsics, Obstacle, ObstacleKind, ObstacleShape, Scene


class ParseError(Exception):
    """Malformed scenario file: bad syntax, wrong structure, or unknown keys."""


class ValidationError(Exception):
    """Well-formed scenario that breaks an invariant; names the field."""


_SCENARIO_DIR = Path(__file__).parent / "scenarios"


def find_scenario(name_or_path) -> Path:
    """Resolve a scenario argument: a file path, or the name of a shipped file."""
    p = Path(name_or_path)
    if p.suffix in (".yaml", ".yml") and p.exists():
        return p
    shipped = _SCENARIO_DIR / f"{name_or_path}.yaml"
    if shipped.exists():
        return shipped
    if p.exists():
        return p
    names = sorted(f.stem for f in _SCENARIO_DIR.glob("*.yaml"))
    raise ParseError(f"no scenario {name_or_path!r}; shipped scenarios: {', '.join(names)}")


# ---------------------------------------------------------------------------
# schema


def _require_mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ParseError(f"{path} must be a mapping")
    return value


def _check_keys(mapping: dict, allowed: Sequence[str], path: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ParseError(f"unknown key {path}.{unknown[0]}")


def _number(mapping: dict, key: str, default, path: str) -> float:
    value = mapping.get(key, default)
    if value is None and default is None:
        raise ValidationError(f"{path}.{key} is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}.{key} must be a number")
    return float(value)


def _integer(mapping: dict, key: str, default, path: str) -> int:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path}.{key} must be an integer")
    return int(value)


def _vector(mapping: dict, key: str, length: int, default, path: str) -> Optional[np.ndarray]:
    value = mapping.get(key, default)
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ValidationError(f"{path}.{key} must be a list of {length} numbers")
    try:
        return np.asarray([float(v) for v in value])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}.{key} must be numeric") from exc


def _parse_obstacle(entry, index: int) -> Obstacle:
    path = f"scene.obstacles[{index}]"
    entry = _require_mapping(entry, path)
    _check_keys(entry, ("id", "shape", "kind", "center_m", "half_extents_m", "radius_m", "z_span_m"), path)
    obstacle_id = entry.get("id", f"obstacle_{index}")
    try:
        shape = ObstacleShape(entry.get("shape", "box"))
        kind = ObstacleKind(entry.get("kind", "ground"))
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    center = _vector(entry, "center_m", 2, None, path)
    if center is None:
        raise ValidationError(f"{path}.center_m is required")
    z_span = _vector(entry, "z_span_m", 2, None, path)
    if z_span is None:
        raise ValidationError(f"{path}.z_span_m is required")
    half = _vector(entry, "half_extents_m", 2, None, path)
    radius = entry.get("radius_m")
    try:
        return Obstacle(
            obstacle_id=str(obstacle_id),
            shape=shape,
            center=center,
            z_min=float(z_span[0]),
            z_max=float(z_span[1]),
            kind=kind,
            half_extents=half,
            radius=float(radius) if radius is not None else None,
        )
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _parse_scene(raw: dict) -> Scene:
    path = "scene"
    sec = _require_mapping(raw.get("scene"), path)
    if not sec:
        raise ValidationError("scene section is required")
    _check_keys(
        sec,
        (
            "corridor_min_m",
            "corridor_max_m",
            "start_robot_pose",
            "goal_m",
            "leash_length_m",
            "chest_height_m",
            "body_radius_m",
            "head_height_m",
            "obstacles",
        ),
        path,
    )
    obstacles_raw = sec.get("obstacles", [])
    if not isinstance(obstacles_raw, list):
        raise ParseError("scene.obstacles must be a list")
    obstacles = tuple(_parse_obstacle(entry, i) for i, entry in enumerate(obstacles_raw))
    start = _vector(sec, "start_robot_pose", 3, None, path)
    goal = _vector(sec, "goal_m", 2, None, path)
    lo = _vector(sec, "corridor_min_m", 2, None, path)
    hi = _vector(sec, "corridor_max_m", 2, None, path)
    for name, v in (("start_robot_pose", start), ("goal_m", goal), ("corridor_min_m", lo), ("corridor_max_m", hi)):
        if v is None:
            raise ValidationError(f"scene.{name} is required")
    try:
        return Scene(
            obstacles=obstacles,
            start_robot=start,
            goal=goal,
            corridor_min=lo,
            corridor_max=hi,
            leash_length_m=_number(sec, "leash_length_m", 1.0, path),
            chest_height_m=_number(sec, "chest_height_m", 1.30, path),
            body_radius_m=_number(sec, "body_radius_m", 0.18, path),
            head_height_m=_number(sec, "head_height_m", 1.75, path),
        )
    except ValueError as exc:
        raise ValidationError(f"scene: {exc}") from exc


def _parse_sensors(raw: dict) -> Tuple[SensorRig, float]:
    path = "sensors"
    sec = _require_mapping(raw.get("sensors"), path)
    _check_keys(
        sec,
        (
            "image_width_px",
            "image_height_px",
            "hfov_deg",
            "chest_hfov_deg",
            "max_range_m",
            "robot_mount_xyz_m",
            "robot_mount_pitch_deg",
            "chest_forward_m",
            "bend_pitch_deg",
            "depth_sigma_m",
        ),
        path,
    )
    width = _integer(sec, "image_width_px", 160, path)
    height = _integer(sec, "image_height_px", 120, path)
    hfov = _number(sec, "hfov_deg", 60.0, path)
    chest_hfov = _number(sec, "chest_hfov_deg", 75.0, path)
    max_range = _number(sec, "max_range_m", 5.0, path)
    try:
        intr = CameraIntrinsics.from_fov(width, height, hfov, max_range)
        rig = SensorRig(
            robot_intrinsics=intr,
            chest_intrinsics=CameraIntrinsics.from_fov(width, height, chest_hfov, max_range),
            robot_mount_xyz=_vector(sec, "robot_mount_xyz_m", 3, [0.25, 0.0, 0.35], path),
            robot_mount_pitch_rad=math.radians(_number(sec, "robot_mount_pitch_deg", 0.0, path)),
            chest_forward_m=_number(sec, "chest_forward_m", 0.05, path),
            bend_pitch_rad=math.radians(_number(sec, "bend_pitch_deg", 55.0, path)),
        )
    except ValueError as exc:
        raise ValidationError(f"sensors: {exc}") from exc
    return rig, _number(sec, "depth_sigma_m", 0.0, path)


def _parse_planner(raw: dict) -> ApfParams:
    path = "planner"
    sec = _require_mapping(raw.get("planner"), path)
    _check_keys(
        sec,
        ("k_att", "k_rep", "d0_m", "v_max_mps", "w_max_radps", "admittance_gain", "yaw_gain", "smoothing_alpha"),
        path,
    )
    try:
        return ApfParams(
            k_att=_number(sec, "k_att", 1.0, path),
            k_rep=_number(sec, "k_rep", 0.05, path),
            d0=_number(sec, "d0_m", 1.0, path),
            v_max=_number(sec, "v_max_mps", 0.6, path),
            w_max=_number(sec, "w_max_radps", 1.2, path),
            admittance_gain=_number(sec, "admittance_gain", 0.5, path),
            yaw_gain=_number(sec, "yaw_gain", 1.5, path),
            smoothing_alpha=_number(sec, "smoothing_alpha", 0.3, path),
        )
    except ValueError as exc:
        raise ValidationError(f"planner: {exc}") from exc


def _parse_costmap(raw: dict) -> PerceptionSpec:
    path = "costmap"
    sec = _require_mapping(raw.get("costmap"), path)
    _check_keys(
        sec,
        ("origin_m", "resolution_m", "width_cells", "height_cells", "r_inf_m", "z_band_m"),
        path,
    )
    z_band = _vector(sec, "z_band_m", 2, [0.02, 0.50], path)
    try:
        return PerceptionSpec(
            origin_xy=_vector(sec, "origin_m", 2, [-1.0, -2.5], path),
            resolution_m=_number(sec, "resolution_m", 0.05, path),
            width=_integer(sec, "width_cells", 100, path),
            height=_integer(sec, "height_cells", 100, path),
            r_inf_m=_number(sec, "r_inf_m", 0.35, path),
            z_band_low_m=float(z_band[0]),
            z_band_high_m=float(z_band[1]),
        )
    except ConfigError as exc:
        raise ValidationError(f"costmap: {exc}") from exc


def _parse_safety(raw: dict) -> HumanSafetyParams:
    path = "safety"
    sec = _require_mapping(raw.get("safety"), path)
    _check_keys(
        sec,
        (
            "corridor_half_width_m",
            "z_band_m",
            "d_safe_m",
            "d_brake_m",
            "v_evade_mps",
            "w_evade_radps",
            "release_hysteresis_m",
            "recovery_duration_s",
            "brake_hold_s",
            "brake_signal_mps",
            "max_evade_turn_rad",
        ),
        path,
    )
    z_band = _vector(sec, "z_band_m", 2, [0.30, 1.90], path)
    try:
        return HumanSafetyParams(
            corridor_half_width=_number(sec, "corridor_half_width_m", 0.35, path),
            z_low=float(z_band[0]),
            z_high=float(z_band[1]),
            d_safe=_number(sec, "d_safe_m", 1.2, path),
            d_brake=_number(sec, "d_brake_m", 0.5, path),
            v_evade=_number(sec, "v_evade_mps", 0.3, path),
            w_evade=_number(sec, "w_evade_radps", 0.9, path),
            release_hysteresis=_number(sec, "release_hysteresis_m", 0.2, path),
            recovery_duration=_number(sec, "recovery_duration_s", 1.0, path),
            brake_hold=_number(sec, "brake_hold_s", 0.6, path),
            brake_signal=_number(sec, "brake_signal_mps", 0.02, path),
            max_evade_turn=_number(sec, "max_evade_turn_rad", 1.2, path),
        )
    except ValueError as exc:
        raise ValidationError(f"safety: {exc}") from exc


def _parse_arbiter(raw: dict) -> ArbiterConfig:
    path = "arbiter"
    sec = _require_mapping(raw.get("arbiter"), path)
    _check_keys(sec, ("epsilon_mps", "staleness_timeout_s", "tick_rate_hz", "char_length_m"), path)
    try:
        return ArbiterConfig(
            epsilon=_number(sec, "epsilon_mps", 0.01, path),
            staleness_timeout=_number(sec, "staleness_timeout_s", 0.5, path),
            tick_rate=_number(sec, "tick_rate_hz", 20.0, path),
            char_length=_number(sec, "char_length_m", 0.5, path),
        )
    except ValueError as exc:
        raise ValidationError(f"arbiter: {exc}") from exc


def _parse_sentinel(raw: dict) -> Tuple[SentinelConfig, bool]:
    path = "sentinel"
    sec = _require_mapping(raw.get("sentinel"), path)
    _check_keys(sec, ("enabled", "d_crit_m", "debounce_s", "roi"), path)
    enabled = sec.get("enabled", True)
    if not isinstance(enabled, bool):
        raise ValidationError("sentinel.enabled must be a boolean")
    roi = None
    if sec.get("roi") is not None:
        bounds = _vector(sec, "roi", 4, None, path)
        try:
            roi = RoiSpec(int(bounds[0]), int(bounds[1]), int(bounds[2]), int(bounds[3]))
        except Exception as exc:
            raise ValidationError(f"sentinel.roi: {exc}") from exc
    try:
        cfg = SentinelConfig(
            d_crit=_number(sec, "d_crit_m", 1.2, path),
            debounce=_number(sec, "debounce_s", 3.0, path),
            roi=roi,
        )
    except ValueError as exc:
        raise ValidationError(f"sentinel: {exc}") from exc
    return cfg, enabled


def _parse_sim(raw: dict, depth_sigma: float) -> SimParams:
    path = "sim"
    sec = _require_mapping(raw.get("sim"), path)
    allowed = (
        "dt_s",
        "timeout_s",
        "goal_tolerance_m",
        "exec_min_command",
        "stall_window_s",
        "stall_grace_s",
        "planner_rate_hz",
        "chest_rate_hz",
        "follower_gain_hz",
        "human_speed_cap_mps",
        "robot_radius_m",
        "robot_height_m",
        "collision_debounce_s",
        "walker_rate_hz",
        "walker_speed_mps",
        "walker_heading_sigma_rad",
        "costmap_memory_s",
    )
    _check_keys(sec, allowed, path)
    try:
        return SimParams(
            dt=_number(sec, "dt_s", 0.02, path),
            timeout_s=_number(sec, "timeout_s", 120.0, path),
            goal_tolerance_m=_number(sec, "goal_tolerance_m", 0.2, path),
            exec_min_command=_number(sec, "exec_min_command", 0.05, path),
            stall_window_s=_number(sec, "stall_window_s", 2.0, path),
            stall_grace_s=_number(sec, "stall_grace_s", 5.0, path),
            planner_rate_hz=_number(sec, "planner_rate_hz", 10.0, path),
            chest_rate_hz=_number(sec, "chest_rate_hz", 15.0, path),
            follower_gain_hz=_number(sec, "follower_gain_hz", 2.0, path),
            human_speed_cap_mps=_number(sec, "human_speed_cap_mps", 1.5, path),
            robot_radius_m=_number(sec, "robot_radius_m", 0.25, path),
            robot_height_m=_number(sec, "robot_height_m", 0.40, path),
            collision_debounce_s=_number(sec, "collision_debounce_s", 1.0, path),
            walker_rate_hz=_number(sec, "walker_rate_hz", 10.0, path),
            walker_speed_mps=_number(sec, "walker_speed_mps", 0.5, path),
            walker_heading_sigma_rad=_number(sec, "walker_heading_sigma_rad", 0.25, path),
            depth_sigma_m=depth_sigma,
            costmap_memory_s=_number(sec, "costmap_memory_s", 1.5, path),
        )
    except ConfigError as exc:
        raise ValidationError(f"sim: {exc}") from exc


_TOP_KEYS = ("name", "scene", "sensors", "planner", "costmap", "safety", "arbiter", "sentinel", "sim", "episode")


def build_config(raw: dict, default_name: str = "scenario") -> EpisodeConfig:
    """Turn a parsed scenario mapping into a validated EpisodeConfig."""
    raw = _require_mapping(raw, "scenario")
    _check_keys(raw, _TOP_KEYS, "scenario")
    scene = _parse_scene(raw)
    rig, depth_sigma = _parse_sensors(raw)
    episode = _require_mapping(raw.get("episode"), "episode")
    _check_keys(episode, ("jitter_xy_m", "bend_window_s"), "episode")
    bend = episode.get("bend_window_s")
    bend_window = None
    if bend is not None:
        pair = _vector(episode, "bend_window_s", 2, None, "episode")
        bend_window = (float(pair[0]), float(pair[1]))
    sentinel_cfg, sentinel_enabled = _parse_sentinel(raw)
    config = EpisodeConfig(
        scene=scene,
        rig=rig,
        perception=_parse_costmap(raw),
        apf=_parse_planner(raw),
        safety=_parse_safety(raw),
        arbiter=_parse_arbiter(raw),
        sentinel=sentinel_cfg,
        sim=_parse_sim(raw, depth_sigma),
        name=str(raw.get("name", default_name)),
        sentinel_enabled=sentinel_enabled,
        bend_window_s=bend_window,
        jitter_xy_m=_number(episode, "jitter_xy_m", 0.0, "episode"),
    )
    try:
        config.validate()
    except ConfigError as exc:
        raise ValidationError(str(exc)) from exc
    return config


def load_scenario(name_or_path) -> EpisodeConfig:
    """Load and fully validate a scenario file.

    Raises ParseError for malformed files or unknown keys, ValidationError
    (naming the field) for invariant breaches.
    """
    path = find_scenario(name_or_path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if raw is None:
        raise ParseError(f"{path}: empty scenario file")
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a mapping")
    return build_config(raw, default_name=path.stem)


def config_to_dict(config: EpisodeConfig) -> dict:
    """Fully resolved configuration as plain data (for snapshots and dumps)."""

    def conv(v):
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        if isinstance(v, np.ndarray):
            return [conv(x) for x in v.tolist()]
        if isinstance(v, Enum):
            return v.value
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        return v

    return conv(dataclasses.asdict(config))


def effective_config_text(config: EpisodeConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=True)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    scenario: str
    conditions: Tuple[Condition, ...]
    seeds: Tuple[int, ...]
    out_dir: str
    jobs: int = 1
    sentinel_enabled: Optional[bool] = None  # None: as the scenario says

    def __post_init__(self):
        if not self.conditions:
            raise ValueError("sweep needs at least one condition")
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def parse_seed_range(text: str) -> Tuple[int, ...]:
    """Parse "A..B" (inclusive) or a single integer."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return tuple(range(lo, hi + 1))
    return (int(text),)


def _run_one(args) -> EpisodeReport:
    scenario, condition, seed, out_dir, sentinel_enabled = args
    config = load_scenario(scenario)
    if sentinel_enabled is not None and sentinel_enabled != config.sentinel_enabled:
        config = dataclasses.replace(config, sentinel_enabled=sentinel_enabled)
    return run_episode(config, condition, seed, out_dir)


def run_sweep(spec: SweepSpec) -> List[EpisodeReport]:
    """Execute every (condition, seed) episode; order of reports is stable."""
    work = [
        (spec.scenario, condition, seed, spec.out_dir, spec.sentinel_enabled)
        for condition in spec.conditions
        for seed in spec.seeds
    ]
    if spec.jobs == 1:
        return [_run_one(item) for item in work]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
        return list(pool.map(_run_one, work))


@dataclass(frozen=True)
class ConditionSummary:
    condition: Condition
    episodes: int
    completed: int
    mean_collisions: float
    std_collisions: float
    mean_ground: float
    mean_overhead: float
    mean_time_s: float  # over completed episodes; nan when none finished
    std_time_s: float
    announcements: int


def summarize(reports: Sequence[EpisodeReport]) -> Dict[Condition, ConditionSummary]:
    """Per-condition mean and std of collision counts and completion times.

    A pure function of the reports; completion statistics cover only
    episodes that reached the goal.
    """
    out: Dict[Condition, ConditionSummary] = {}
    for condition in Condition:
        batch = [r for r in reports if r.condition is condition]
        if not batch:
            continue
        totals = np.array([r.collisions_total for r in batch], dtype=float)
        ground = np.array([r.collisions_ground for r in batch], dtype=float)
        overhead = np.array([r.collisions_overhead for r in batch], dtype=float)
        times = np.array(
            [r.completion_time_s for r in batch if r.status is TerminationStatus.GOAL], dtype=float
        )
        out[condition] = ConditionSummary(
            condition=condition,
            episodes=len(batch),
            completed=int(times.size),
            mean_collisions=float(totals.mean()),
            std_collisions=float(totals.std(ddof=1)) if totals.size > 1 else 0.0,
            mean_ground=float(ground.mean()),
            mean_overhead=float(overhead.mean()),
            mean_time_s=float(times.mean()) if times.size else float("nan"),
            std_time_s=float(times.std(ddof=1)) if times.size > 1 else 0.0,
            announcements=sum(r.announcements for r in batch),
        )
    return out


def format_summary_table(summaries: Dict[Condition, ConditionSummary]) -> str:
    header = (
        f"{'condition':<12} {'n':>3} {'done':>4} {'collisions':>14} "
        f"{'ground':>7} {'overhead':>9} {'time [s]':>16} {'announce':>9}"
    )
    lines = [header, "-" * len(header)]
    for condition in Condition:
        s = summaries.get(condition)
        if s is None:
            continue
        time_part = (
            f"{s.mean_time_s:7.2f} ± {s.std_time_s:5.2f}" if s.completed else f"{'—':>15}"
        )
        lines.append(
            f"{s.condition.value:<12} {s.episodes:>3} {s.completed:>4} "
            f"{s.mean_collisions:6.2f} ± {s.std_collisions:4.2f} "
            f"{s.mean_ground:7.2f} {s.mean_overhead:9.2f} {time_part:>16} {s.announcements:>9}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# trace files


@dataclass(frozen=True)
class TraceData:
    t: np.ndarray
    robot_xy: np.ndarray  # (N, 2)
    robot_theta: np.ndarray
    human_xy: np.ndarray  # (N, 2)
    source: List[str]
    a: np.ndarray  # int
    v: np.ndarray  # (N, 3) v_x, v_y, w_z
    min_roi_depth: np.ndarray  # NaN where blank
    event: List[str]


def read_trace(path) -> TraceData:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: empty trace")
    n = len(rows)
    t = np.array([float(r["t"]) for r in rows])
    robot = np.array([[float(r["robot_x"]), float(r["robot_y"])] for r in rows])
    theta = np.array([float(r["robot_theta"]) for r in rows])
    human = np.array([[float(r["human_x"]), float(r["human_y"])] for r in rows])
    v = np.array([[float(r["v_x"]), float(r["v_y"]), float(r["w_z"])] for r in rows])
    depth = np.array(
        [float(r["min_roi_depth"]) if r["min_roi_depth"] else math.nan for r in rows]
    )
    return TraceData(
        t=t,
        robot_xy=robot,
        robot_theta=theta,
        human_xy=human,
        source=[r["source"] for r in rows],
        a=np.array([int(r["A"]) for r in rows]),
        v=v,
        min_roi_depth=depth,
        event=[r["event"] for r in rows],
    )


def command_columns(path) -> str:
    """The executed-command portion of a trace (t, source, A, v_x, v_y, w_z).

    Lets tests compare control behavior between runs whose diagnostic
    columns legitimately differ (for example with the sentinel disabled).
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        lines = [
            ",".join((r["t"], r["source"], r["A"], r["v_x"], r["v_y"], r["w_z"])) for r in reader
        ]
    return "\n".join(lines)


def render_trace_text(trace: TraceData, width: int = 72, height: int = 20) -> str:
    """Character plot: top-down paths, then a command timeline strip."""
    pts = np.vstack([trace.robot_xy, trace.human_xy])
    lo = pts.min(axis=0) - 0.2
    hi = pts.max(axis=0) + 0.2
    span = np.maximum(hi - lo, 1e-6)
    grid = [[" "] * width for _ in range(height)]

    def mark(xy: np.ndarray, glyph: str) -> None:
        cols = np.clip(((xy[:, 0] - lo[0]) / span[0] * (width - 1)).astype(int), 0, width - 1)
        rows = np.clip(((xy[:, 1] - lo[1]) / span[1] * (height - 1)).astype(int), 0, height - 1)
        for cc, rr in zip(cols, rows):
            row = height - 1 - rr
            grid[row][cc] = "@" if grid[row][cc] not in (" ", glyph) else glyph

    mark(trace.human_xy, "o")
    mark(trace.robot_xy, "*")
    panel = "\n".join("".join(row) for row in grid)

    n = len(trace.t)
    cols = min(width, n)
    idx = np.linspace(0, n - 1, cols).astype(int)
    src_strip = "".join(
        "H" if trace.a[i] else ("w" if trace.source[i] == "walker" else ".") for i in idx
    )
    w_strip = "".join("+" if trace.v[i, 2] > 1e-6 else ("-" if trace.v[i, 2] < -1e-6 else "0") for i in idx)
    legend = (
        f"x: [{lo[0]:.2f}, {hi[0]:.2f}] m   y: [{lo[1]:.2f}, {hi[1]:.2f}] m   "
        f"t: [{trace.t[0]:.2f}, {trace.t[-1]:.2f}] s   (* robot, o human, @ both)"
    )
    return "\n".join(
        [panel, legend, "", "source  " + src_strip, "w_z     " + w_strip]
    )


def _svg_polyline(xy: Sequence[Tuple[float, float]], color: str, width: float = 1.5) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in xy)
    return f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{pts}"/>'


def render_trace_svg(trace: TraceData) -> str:
    """Standalone SVG: the top-down trajectory and the w_z profile with
    override intervals shaded."""
    w_px, h_path, h_vel, pad = 640.0, 280.0, 140.0, 30.0
    pts = np.vstack([trace.robot_xy, trace.human_xy])
    lo = pts.min(axis=0) - 0.2
    hi = pts.max(axis=0) + 0.2
    span = np.maximum(hi - lo, 1e-6)

    def to_path(xy: np.ndarray) -> List[Tuple[float, float]]:
        xs = pad + (xy[:, 0] - lo[0]) / span[0] * (w_px - 2 * pad)
        ys = pad + (1.0 - (xy[:, 1] - lo[1]) / span[1]) * (h_path - 2 * pad)
        return list(zip(xs, ys))

    t0, t1 = float(trace.t[0]), float(trace.t[-1])
    t_span = max(t1 - t0, 1e-6)
    w_abs = max(float(np.abs(trace.v[:, 2]).max()), 1e-6)
    y_mid = h_path + pad + (h_vel - 2 * pad) / 2.0

    def vel_pts() -> List[Tuple[float, float]]:
        xs = pad + (trace.t - t0) / t_span * (w_px - 2 * pad)
        ys = y_mid - trace.v[:, 2] / w_abs * (h_vel - 2 * pad) / 2.0
        return list(zip(xs, ys))

    shades = []
    in_block = None
    a = trace.a
    for i in range(len(a)):
        if a[i] and in_block is None:
            in_block = trace.t[i]
        if (not a[i] or i == len(a) - 1) and in_block is not None:
            x0 = pad + (in_block - t0) / t_span * (w_px - 2 * pad)
            x1 = pad + (trace.t[i] - t0) / t_span * (w_px - 2 * pad)
            shades.append(
                f'<rect x="{x0:.2f}" y="{h_path + pad:.2f}" width="{max(x1 - x0, 1.0):.2f}" '
                f'height="{h_vel - 2 * pad:.2f}" fill="#f5b7b1" opacity="0.6"/>'
            )
            in_block = None

    total_h = h_path + h_vel
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w_px:.0f} {total_h:.0f}">',
        f'<rect width="{w_px:.0f}" height="{total_h:.0f}" fill="white"/>',
        *shades,
        _svg_polyline(to_path(trace.human_xy), "#e67e22"),
        _svg_polyline(to_path(trace.robot_xy), "#2980b9"),
        f'<line x1="{pad}" y1="{y_mid:.2f}" x2="{w_px - pad}" y2="{y_mid:.2f}" stroke="#bbb"/>',
        _svg_polyline(vel_pts(), "#27ae60", 1.0),
        f'<text x="{pad}" y="18" font-size="12" fill="#333">robot (blue) and human (orange) paths; '
        f"w_z profile below, override intervals shaded</text>",
        "</svg>",
    ]
    return "\n".join(parts)
