"""Scenario schema, sweeps, summaries, and trace file utilities."""

import copy
import dataclasses
import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from crossnav.harness import (
    ConditionSummary,
    ParseError,
    SweepSpec,
    TraceData,
    ValidationError,
    build_config,
    command_columns,
    config_to_dict,
    effective_config_text,
    find_scenario,
    format_summary_table,
    load_scenario,
    parse_seed_range,
    read_trace,
    render_trace_svg,
    render_trace_text,
    run_sweep,
    summarize,
)
from crossnav.sim import Condition, EpisodeReport, TerminationStatus, run_episode
from crossnav.world import ObstacleKind, ObstacleShape

DATA = Path(__file__).parent / "data"
MINI = DATA / "mini.yaml"


def minimal_raw():
    """Smallest scenario mapping that passes validation."""
    return {
        "scene": {
            "corridor_min_m": [-2.0, -2.0],
            "corridor_max_m": [6.0, 2.0],
            "start_robot_pose": [0.0, 0.0, 0.0],
            "goal_m": [3.5, 0.0],
        }
    }


class TestFindScenario:
    def test_shipped_name_resolves(self):
        path = find_scenario("hanging_lamp")
        assert path.name == "hanging_lamp.yaml"
        assert path.exists()

    def test_explicit_path_wins(self):
        assert find_scenario(MINI) == MINI
        assert find_scenario(str(MINI)) == MINI

    def test_unknown_name_lists_the_options(self):
        with pytest.raises(ParseError, match="hanging_lamp"):
            find_scenario("no_such_course")


class TestLoadScenario:
    def test_mini_fixture(self):
        cfg = load_scenario(MINI)
        assert cfg.name == "mini"
        np.testing.assert_allclose(cfg.scene.goal, [3.5, 0.0])
        assert cfg.sim.timeout_s == 40.0
        assert cfg.safety.d_safe == 1.2
        (ob,) = cfg.scene.obstacles
        assert ob.obstacle_id == "bin"
        assert ob.shape is ObstacleShape.BOX and ob.kind is ObstacleKind.GROUND
        np.testing.assert_allclose(ob.center, [1.8, 0.15])
        # untouched sections fall back to defaults
        assert cfg.apf.k_att == 1.0
        assert cfg.arbiter.epsilon == 0.01

    def test_all_shipped_scenarios_load(self):
        scenario_dir = find_scenario("canonical").parent
        names = sorted(p.stem for p in scenario_dir.glob("*.yaml"))
        assert names == ["canonical", "canonical_bend", "hanging_lamp"]
        for name in names:
            cfg = load_scenario(name)
            assert cfg.name == name

    def test_canonical_course_mixes_both_obstacle_kinds(self):
        cfg = load_scenario("canonical")
        kinds = [ob.kind for ob in cfg.scene.obstacles]
        assert kinds.count(ObstacleKind.GROUND) == 3
        assert kinds.count(ObstacleKind.OVERHEAD) == 2

    def test_bend_variant_only_adds_the_window(self):
        plain = load_scenario("canonical")
        bend = load_scenario("canonical_bend")
        assert plain.bend_window_s is None
        assert bend.bend_window_s is not None
        lo, hi = bend.bend_window_s
        assert 0 <= lo < hi
        stripped = dataclasses.replace(bend, bend_window_s=None, name="canonical")
        assert effective_config_text(stripped) == effective_config_text(plain)

    def test_empty_file_is_a_parse_error(self, tmp_path):
        p = tmp_path / "empty.yaml"
        p.write_text("")
        with pytest.raises(ParseError):
            load_scenario(p)

    def test_non_mapping_top_level_is_a_parse_error(self, tmp_path):
        p = tmp_path / "list.yaml"
        p.write_text("- 1\n- 2\n")
        with pytest.raises(ParseError):
            load_scenario(p)

    def test_broken_yaml_is_a_parse_error(self, tmp_path):
        p = tmp_path / "broken.yaml"
        p.write_text("scene: [unclosed\n")
        with pytest.raises(ParseError):
            load_scenario(p)


class TestSchema:
    def test_unknown_top_level_key(self):
        raw = minimal_raw()
        raw["plannerr"] = {}
        with pytest.raises(ParseError, match=r"unknown key scenario\.plannerr"):
            build_config(raw)

    def test_unknown_nested_key(self):
        raw = minimal_raw()
        raw["planner"] = {"k_atx": 2.0}
        with pytest.raises(ParseError, match=r"unknown key planner\.k_atx"):
            build_config(raw)

    def test_wrong_type_names_the_field(self):
        raw = minimal_raw()
        raw["planner"] = {"k_att": "strong"}
        with pytest.raises(ValidationError, match=r"planner\.k_att must be a number"):
            build_config(raw)

    def test_bool_is_not_a_number(self):
        raw = minimal_raw()
        raw["arbiter"] = {"epsilon_mps": True}
        with pytest.raises(ValidationError, match=r"arbiter\.epsilon_mps"):
            build_config(raw)

    def test_integer_fields_reject_floats(self):
        raw = minimal_raw()
        raw["costmap"] = {"width_cells": 99.5}
        with pytest.raises(ValidationError, match=r"costmap\.width_cells must be an integer"):
            build_config(raw)

    def test_missing_required_scene_field(self):
        raw = minimal_raw()
        del raw["scene"]["goal_m"]
        with pytest.raises(ValidationError, match=r"scene\.goal_m is required"):
            build_config(raw)

    def test_scene_section_is_required(self):
        with pytest.raises(ValidationError, match="scene section is required"):
            build_config({})

    def test_vector_length_is_checked(self):
        raw = minimal_raw()
        raw["scene"]["goal_m"] = [3.5]
        with pytest.raises(ValidationError, match="list of 2 numbers"):
            build_config(raw)

    def test_obstacle_shape_must_be_known(self):
        raw = minimal_raw()
        raw["scene"]["obstacles"] = [
            {"shape": "sphere", "center_m": [1.0, 0.0], "z_span_m": [0.0, 1.0]}
        ]
        with pytest.raises(ValidationError, match=r"scene\.obstacles\[0\]"):
            build_config(raw)

    def test_box_needs_half_extents(self):
        raw = minimal_raw()
        raw["scene"]["obstacles"] = [
            {"shape": "box", "center_m": [1.0, 0.0], "z_span_m": [0.0, 1.0]}
        ]
        with pytest.raises(ValidationError, match="half_extents"):
            build_config(raw)

    def test_invariant_breaches_name_the_section(self):
        raw = minimal_raw()
        raw["safety"] = {"d_safe_m": 0.5, "d_brake_m": 0.5}
        with pytest.raises(ValidationError, match="safety:"):
            build_config(raw)

    def test_cross_section_invariants_are_checked(self):
        raw = minimal_raw()
        raw["scene"]["goal_m"] = [7.0, 0.0]  # outside the corridor
        with pytest.raises(ValidationError):
            build_config(raw)

    def test_sentinel_enabled_must_be_boolean(self):
        raw = minimal_raw()
        raw["sentinel"] = {"enabled": "yes please"}
        with pytest.raises(ValidationError, match=r"sentinel\.enabled"):
            build_config(raw)

    def test_sentinel_roi_round_trips(self):
        raw = minimal_raw()
        raw["sentinel"] = {"roi": [40, 120, 60, 96]}
        cfg = build_config(raw)
        roi = cfg.sentinel.roi
        assert (roi.u_min, roi.u_max, roi.v_min, roi.v_max) == (40, 120, 60, 96)

    def test_bend_window_round_trips(self):
        raw = minimal_raw()
        raw["episode"] = {"bend_window_s": [2.0, 5.0]}
        assert build_config(raw).bend_window_s == (2.0, 5.0)

    def test_defaults_are_filled_in(self):
        cfg = build_config(minimal_raw())
        assert cfg.sim.dt == 0.02
        assert cfg.perception.r_inf_m == 0.35
        assert cfg.sentinel_enabled is True
        assert cfg.rig.robot_intrinsics.width == 160


class TestConfigDump:
    def test_dict_dump_is_json_serializable(self):
        cfg = load_scenario(MINI)
        dumped = config_to_dict(cfg)
        json.dumps(dumped)  # would raise on ndarray / Enum leftovers
        assert dumped["name"] == "mini"
        assert dumped["scene"]["goal"] == [3.5, 0.0]
        assert dumped["scene"]["obstacles"][0]["kind"] == "ground"

    def test_effective_text_round_trips_through_yaml(self):
        cfg = load_scenario(MINI)
        assert yaml.safe_load(effective_config_text(cfg)) == config_to_dict(cfg)

    def test_canonical_effective_snapshot(self):
        # frozen copy of every resolved default for the main course; a diff
        # here means a default changed and recorded results no longer apply
        expected = (DATA / "canonical_effective.yaml").read_text()
        assert effective_config_text(load_scenario("canonical")) == expected


class TestSeedRange:
    def test_single_seed(self):
        assert parse_seed_range("7") == (7,)

    def test_inclusive_range(self):
        assert parse_seed_range("0..4") == (0, 1, 2, 3, 4)
        assert parse_seed_range("3..3") == (3,)

    def test_descending_range_is_rejected(self):
        with pytest.raises(ValueError):
            parse_seed_range("4..2")

    def test_garbage_is_rejected(self):
        with pytest.raises(ValueError):
            parse_seed_range("five")


def report_of(condition, seed=0, status=TerminationStatus.GOAL, time_s=10.0,
              ground=0, overhead=0, announcements=0):
    return EpisodeReport(
        condition=condition,
        seed=seed,
        status=status,
        completion_time_s=time_s if status is TerminationStatus.GOAL else None,
        collisions_total=ground + overhead,
        collisions_ground=ground,
        collisions_overhead=overhead,
        robot_contacts=0,
        announcements=announcements,
        trace_path="trace.csv",
    )


class TestSweep:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SweepSpec(str(MINI), (), (0,), "out")
        with pytest.raises(ValueError):
            SweepSpec(str(MINI), (Condition.UNASSISTED,), (), "out")
        with pytest.raises(ValueError):
            SweepSpec(str(MINI), (Condition.UNASSISTED,), (0,), "out", jobs=0)

    def test_runs_every_cell_in_stable_order(self, tmp_path):
        spec = SweepSpec(
            scenario=str(MINI),
            conditions=(Condition.UNASSISTED, Condition.SINGLE_VIEW),
            seeds=(0, 1),
            out_dir=str(tmp_path),
        )
        reports = run_sweep(spec)
        assert [(r.condition, r.seed) for r in reports] == [
            (Condition.UNASSISTED, 0),
            (Condition.UNASSISTED, 1),
            (Condition.SINGLE_VIEW, 0),
            (Condition.SINGLE_VIEW, 1),
        ]
        for r in reports:
            assert Path(r.trace_path).exists()

    def test_sentinel_override_silences_announcements(self, tmp_path):
        spec = SweepSpec(
            scenario=str(MINI),
            conditions=(Condition.SINGLE_VIEW,),
            seeds=(0,),
            out_dir=str(tmp_path),
            sentinel_enabled=False,
        )
        (report,) = run_sweep(spec)
        assert report.announcements == 0
        assert not Path(report.trace_path).with_suffix(".announcements.txt").exists()

    def test_summarize_means_and_stds(self):
        reports = [
            report_of(Condition.CROSS_VIEW, 0, time_s=10.0, ground=1, announcements=2),
            report_of(Condition.CROSS_VIEW, 1, time_s=14.0, overhead=2, announcements=1),
            report_of(Condition.CROSS_VIEW, 2, status=TerminationStatus.TIMEOUT, ground=3),
        ]
        summary = summarize(reports)[Condition.CROSS_VIEW]
        assert summary.episodes == 3 and summary.completed == 2
        assert summary.mean_collisions == pytest.approx(np.mean([1, 2, 3]))
        assert summary.std_collisions == pytest.approx(np.std([1, 2, 3], ddof=1))
        assert summary.mean_ground == pytest.approx(np.mean([1, 0, 3]))
        assert summary.mean_overhead == pytest.approx(np.mean([0, 2, 0]))
        # completion stats cover only episodes that reached the goal
        assert summary.mean_time_s == pytest.approx(12.0)
        assert summary.std_time_s == pytest.approx(np.std([10.0, 14.0], ddof=1))
        assert summary.announcements == 3

    def test_summarize_without_completions(self):
        reports = [report_of(Condition.UNASSISTED, 0, status=TerminationStatus.TIMEOUT)]
        summary = summarize(reports)[Condition.UNASSISTED]
        assert summary.completed == 0
        assert math.isnan(summary.mean_time_s)
        assert summary.std_time_s == 0.0

    def test_summarize_skips_absent_conditions(self):
        out = summarize([report_of(Condition.CROSS_VIEW)])
        assert set(out) == {Condition.CROSS_VIEW}

    def test_format_summary_table(self):
        table = format_summary_table(
            summarize(
                [
                    report_of(Condition.UNASSISTED, status=TerminationStatus.TIMEOUT),
                    report_of(Condition.CROSS_VIEW, time_s=12.34, announcements=5),
                ]
            )
        )
        lines = table.splitlines()
        assert len(lines) == 4  # header, rule, two condition rows
        assert "unassisted" in lines[2] and "—" in lines[2]
        assert "crossview" in lines[3] and "12.34" in lines[3]


def synthetic_trace():
    n = 40
    t = np.linspace(0.0, 3.9, n)
    a = np.zeros(n, dtype=int)
    a[10:20] = 1
    v = np.zeros((n, 3))
    v[10:20, 2] = 0.9
    v[25:30, 2] = -0.9
    robot = np.column_stack([np.linspace(0, 4, n), np.zeros(n)])
    human = np.column_stack([np.linspace(-1, 3, n), 0.2 * np.ones(n)])
    source = ["human" if flag else "apf" for flag in a]
    return TraceData(
        t=t,
        robot_xy=robot,
        robot_theta=np.zeros(n),
        human_xy=human,
        source=source,
        a=a,
        v=v,
        min_roi_depth=np.full(n, np.nan),
        event=[""] * n,
    )


class TestTraceUtils:
    def test_read_trace_round_trip(self, tmp_path):
        rep = run_episode(load_scenario(MINI), Condition.SINGLE_VIEW, 0, out_dir=tmp_path)
        trace = read_trace(rep.trace_path)
        n = len(trace.t)
        assert trace.robot_xy.shape == (n, 2)
        assert trace.human_xy.shape == (n, 2)
        assert trace.v.shape == (n, 3)
        assert len(trace.source) == len(trace.event) == n
        assert trace.t[0] == 0.0
        assert set(trace.source) == {"apf"}
        assert trace.event[-1] == "goal"
        # depth column is NaN before the first planner frame, numeric after
        assert math.isnan(trace.min_roi_depth[0])
        assert np.isfinite(trace.min_roi_depth).any()

    def test_read_trace_rejects_empty(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("t,robot_x\n")
        with pytest.raises(ValueError):
            read_trace(p)

    def test_command_columns_subset(self, tmp_path):
        rep = run_episode(load_scenario(MINI), Condition.SINGLE_VIEW, 0, out_dir=tmp_path)
        text = command_columns(rep.trace_path)
        first = text.splitlines()[0].split(",")
        assert len(first) == 6
        assert first[0] == "0.000" and first[1] == "apf"

    def test_render_text_layout(self):
        out = render_trace_text(synthetic_trace(), width=60, height=12)
        lines = out.splitlines()
        panel, legend, strip_src, strip_w = lines[:12], lines[12], lines[14], lines[15]
        assert all(len(row) <= 60 for row in panel)
        assert "* robot, o human" in legend
        assert strip_src.startswith("source")
        body = strip_src.split("source  ", 1)[1]
        assert "H" in body and "." in body
        wbody = strip_w.split("w_z     ", 1)[1]
        assert "+" in wbody and "-" in wbody and "0" in wbody

    def test_render_svg_structure(self):
        svg = render_trace_svg(synthetic_trace())
        assert svg.startswith("<svg")
        assert svg.count("<polyline") == 3  # human path, robot path, w_z profile
        # one shaded override interval for the single contiguous a == 1 block
        assert svg.count("<rect") == 2  # background + one shade
        assert "</svg>" in svg
