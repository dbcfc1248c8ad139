import math

import numpy as np
import pytest

import jumper


def test_schedule_and_mixing():
    assert [jumper.schedule_n(t) for t in (0, 299, 300, 600, 10**6)] == [2, 2, 1, 0, 0]
    assert jumper.mix_select(49, 2) == "guide"
    assert jumper.mix_select(50, 2) == "learner"


def test_gae_single_step():
    adv, ret = jumper.gae([1.0], [0.25], [0], 0.5, gamma=0.9, lam=0.8)
    assert adv[0] == pytest.approx(1.0 + 0.45 - 0.25)
    assert ret[0] == pytest.approx(adv[0] + 0.25)


def test_clip():
    assert jumper.clipped_objective(1.5, 1.0, 0.2) == 1.2
    assert jumper.clipped_objective(0.5, -1.0, 0.2) == -0.8


def test_reward_weights():
    w = jumper.default_reward_weights()
    assert len(w) == 18
    assert w["termination"] == -200.0
    assert w["out_bound"] == 200.0


def test_terrain():
    p = jumper.level_params("SteppingStone", 9)
    assert p["stone_size"] == 0.125
    t = jumper.generate_terrain("SteppingStone", 5, seed=3, extent=12.0)
    assert isinstance(t["heights"], np.ndarray)
    assert t["heights"].shape[0] > 0
    assert t["goal_x"] > t["spawn_x"]
    assert jumper.render_terrain("Flat") == jumper.render_terrain("Flat")
    with pytest.raises(ValueError):
        jumper.level_params("Lava", 0)


def test_env_rollout():
    env = jumper.HopperEnv(assist=True)
    obs = env.reset("Flat", seed=1)
    assert obs.shape == (11,)
    for _ in range(20):
        obs, reward, done, reason, terms = env.step([0.53, -1.0])
        assert math.isfinite(reward)
        assert not done
    assert set(terms) == set(jumper.default_reward_weights())
    aware = jumper.HopperEnv(terrain_aware=True)
    assert aware.reset("RoughGround", level=3).shape == (aware.obs_dim,)


def test_config_errors_name_the_key():
    assert jumper.validate_config("")["method"] == "JumpER"
    with pytest.raises(jumper.ConfigError, match="ppo.gamma"):
        jumper.validate_config('[ppo]\ngamma = "x"\n')


def test_cli_train_and_eval(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        "[ppo]\nnum_envs = 4\nepochs = 1\n[net]\nhidden = [8, 8]\n[stage1]\niterations = 3\n"
    )
    out = tmp_path / "out"
    assert jumper.run_cli(["train", "-c", str(cfg), "-o", str(out)]) == 0
    ckpt = out / "seed0" / "stage1.jmpr"
    assert ckpt.read_bytes()[:4] == b"JMPR"
    m = jumper.evaluate_checkpoint(str(ckpt), episodes=2)
    assert m["episodes"] == 2
    assert 0.0 <= m["r_air"] <= 1.0
    assert jumper.run_cli(["eval", "--checkpoint", str(tmp_path / "none.jmpr")]) == 2
