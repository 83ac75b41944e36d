import math

import numpy as np
import pytest

from wavegait.config import (
    ControllerSpec,
    OUT_DIR_ENV,
    TerrainSpec,
    build_controller,
    build_terrain,
    config_from_dict,
    default_out_dir,
    initial_observation,
    load_config,
    resolved_dict,
    resolved_json,
)
from wavegait.control import Observation
from wavegait.errors import ConfigurationError


class TestDefaults:
    def test_empty_doc_gives_defaults(self):
        cfg = config_from_dict({})
        assert cfg.cycles == 8
        assert cfg.seed == 0
        assert cfg.controller.kind == "open_loop"
        assert cfg.terrain.kind == "flat"
        assert cfg.gait.theta_leg_amp == pytest.approx(math.radians(30.0))
        assert cfg.gait.theta_body_amp == pytest.approx(math.radians(10.0))
        assert cfg.gait.a_v == 0.0

    def test_out_dir_env_default(self, monkeypatch):
        monkeypatch.setenv(OUT_DIR_ENV, "/tmp/somewhere")
        assert default_out_dir() == "/tmp/somewhere"
        monkeypatch.delenv(OUT_DIR_ENV)
        assert default_out_dir() == "results"


class TestParsing:
    def test_degrees_convert_to_radians(self):
        cfg = config_from_dict({"gait": {"a_v_deg": 15.0, "theta_leg_deg": 25.0}})
        assert cfg.gait.a_v == pytest.approx(math.radians(15.0))
        assert cfg.gait.theta_leg_amp == pytest.approx(math.radians(25.0))

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"gati": {}})

    def test_unknown_gait_key(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"gait": {"theta_leg": 30.0}})

    def test_unknown_controller_key(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"controller": {"kp": -50}})

    def test_non_mapping_rejected(self):
        with pytest.raises(ConfigurationError):
            config_from_dict([1, 2, 3])

    def test_n_pairs_syncs_robot(self):
        cfg = config_from_dict({"gait": {"n_pairs": 6}})
        assert cfg.robot.n_pairs == 6

    def test_bad_controller_kind(self):
        with pytest.raises(ConfigurationError):
            ControllerSpec(kind="pid")

    def test_policy_needs_checkpoint(self):
        with pytest.raises(ConfigurationError):
            ControllerSpec(kind="policy")

    def test_missing_checkpoint_file(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"controller": {"kind": "policy", "checkpoint": "/nope.json"}})

    def test_bad_terrain_kind(self):
        with pytest.raises(ConfigurationError):
            TerrainSpec(kind="lava")

    def test_negative_cycles(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"cycles": -1})


class TestYaml:
    def test_load_roundtrip(self, tmp_path):
        p = tmp_path / "exp.yaml"
        p.write_text(
            "gait:\n  a_v_deg: 20\ncontroller:\n  kind: linear\n  beta_0: 0.85\n"
            "terrain:\n  kind: rl\n  sigma_cm: 6\ncycles: 4\nseed: 3\n"
        )
        cfg = load_config(str(p))
        assert cfg.controller.kind == "linear"
        assert cfg.controller.beta_0 == 0.85
        assert cfg.terrain.sigma_cm == 6
        assert cfg.cycles == 4
        assert cfg.gait.a_v == pytest.approx(math.radians(20))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "missing.yaml"))

    def test_malformed_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("gait: [unclosed\n  - ")
        with pytest.raises(ConfigurationError):
            load_config(str(p))

    def test_empty_file_is_defaults(self, tmp_path):
        p = tmp_path / "empty.yaml"
        p.write_text("")
        assert load_config(str(p)).cycles == 8


class TestResolved:
    def test_roundtrips_through_dict(self):
        doc = {"gait": {"a_v_deg": 10.0}, "terrain": {"kind": "rl", "sigma_cm": 5.0}, "seed": 7}
        cfg = config_from_dict(doc)
        again = config_from_dict(resolved_dict(cfg))
        assert resolved_json(cfg) == resolved_json(again)

    def test_angles_back_in_degrees(self):
        cfg = config_from_dict({"gait": {"theta_body_deg": 12.5}})
        assert resolved_dict(cfg)["gait"]["theta_body_deg"] == pytest.approx(12.5)

    def test_json_is_sorted_and_stable(self):
        cfg = config_from_dict({})
        assert resolved_json(cfg) == resolved_json(config_from_dict({}))


class TestBuilders:
    def test_flat_terrain(self):
        f = build_terrain(TerrainSpec(kind="flat"))
        assert np.all(f.heights == 0.0)

    def test_blocks_terrain_seeded(self):
        a = build_terrain(TerrainSpec(kind="blocks", rugosity=0.3, seed=4))
        b = build_terrain(TerrainSpec(kind="blocks", rugosity=0.3, seed=4))
        np.testing.assert_array_equal(a.heights, b.heights)

    def test_rl_terrain_mean(self):
        f = build_terrain(TerrainSpec(kind="rl", sigma_cm=4.0, seed=1))
        assert np.mean(f.heights) == pytest.approx(0.20, rel=0.05)

    def test_open_loop_controller_ignores_beta(self):
        cfg = config_from_dict({"gait": {"a_v_deg": 5.0}})
        step = build_controller(cfg)
        low = step(Observation(0.0, 0.0, math.radians(30), beta=0.2))
        high = step(Observation(0.0, 0.0, math.radians(30), beta=1.0))
        assert low == high
        assert low.a_v == pytest.approx(math.radians(5.0))

    def test_linear_controller_uses_config_gain(self):
        cfg = config_from_dict({"controller": {"kind": "linear", "k_p_deg": -100.0, "beta_0": 0.8}})
        step = build_controller(cfg)
        cmd = step(Observation(0.0, math.radians(10), math.radians(30), beta=0.6))
        assert math.degrees(cmd.a_v) == pytest.approx(20.0)

    def test_initial_observation_full_contact(self):
        obs = initial_observation(config_from_dict({}))
        assert obs.beta == 1.0
        assert obs.theta_leg_amp == pytest.approx(math.radians(30.0))
