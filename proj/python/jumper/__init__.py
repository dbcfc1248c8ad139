"""Planar monoped locomotion with guided patch training."""

from ._jumper import (
    ConfigError,
    HopperEnv,
    clipped_objective,
    default_reward_weights,
    evaluate_checkpoint,
    gae,
    generate_terrain,
    level_params,
    mix_select,
    render_terrain,
    run_cli,
    schedule_n,
    validate_config,
)

__all__ = [
    "ConfigError",
    "HopperEnv",
    "clipped_objective",
    "default_reward_weights",
    "evaluate_checkpoint",
    "gae",
    "generate_terrain",
    "level_params",
    "mix_select",
    "render_terrain",
    "run_cli",
    "schedule_n",
    "validate_config",
]
