"""Demonstration collection and replay."""

from __future__ import annotations

import logging

from vla_rig.common.seeding import derive_seed
from vla_rig.data.episodes import Episode, EpisodeMeta, Step
from vla_rig.simlab.expert import scripted_expert
from vla_rig.simlab.world import (
    ACTION_DIM,
    EnvAction,
    WorldConfig,
    delivered,
    observe,
    reset,
    step,
)

logger = logging.getLogger(__name__)

DEFAULT_DATASET = "simlab-reach"


def collect_episode(
    env_seed: int,
    cfg: WorldConfig | None = None,
    *,
    initial_noop: bool = False,
    dataset_name: str = DEFAULT_DATASET,
) -> Episode:
    """Roll out the scripted expert from ``env_seed`` and record every step.

    With ``initial_noop`` the first recorded action is all zeros although the
    arm executes the expert command, as happens when a teleoperation logger
    writes its first sample before the command stream starts.
    """

    cfg = cfg or WorldConfig()
    state = reset(env_seed, cfg)
    steps: list[Step] = []
    while state.tick < cfg.t_max and not delivered(state, cfg):
        command = scripted_expert(state, cfg)
        recorded = [0.0] * ACTION_DIM if initial_noop and not steps else command.flatten()
        steps.append(Step(obs=observe(state, cfg).tolist(), action=recorded))
        state = step(state, command, cfg)

    success = delivered(state, cfg)
    if not success:
        logger.warning("Expert failed to deliver for env seed %d", env_seed)
    steps[-1] = steps[-1].model_copy(update={"is_terminal": True})
    return Episode(
        dataset_name=dataset_name,
        instruction=cfg.instruction,
        steps=steps,
        meta=EpisodeMeta(success=success, env_seed=env_seed),
    )


def collect_demonstrations(
    n_episodes: int,
    seed: int,
    cfg: WorldConfig | None = None,
    *,
    initial_noop: bool = False,
    dataset_name: str = DEFAULT_DATASET,
) -> list[Episode]:
    """Collect ``n_episodes`` expert episodes; episode ``i`` uses ``derive_seed(seed, i)``."""

    cfg = cfg or WorldConfig()
    episodes = [
        collect_episode(
            derive_seed(seed, index), cfg, initial_noop=initial_noop, dataset_name=dataset_name
        )
        for index in range(n_episodes)
    ]
    logger.info(
        "Collected %d episodes (%d steps) from seed %d",
        len(episodes),
        sum(ep.n_steps for ep in episodes),
        seed,
    )
    return episodes


def replay_episode(episode: Episode, cfg: WorldConfig | None = None) -> bool:
    """Re-execute the recorded actions from the episode's seed.

    Returns whether the replay delivers the object. Episodes without an
    ``env_seed`` cannot be replayed and count as failed.
    """

    cfg = cfg or WorldConfig()
    if episode.meta.env_seed is None:
        return False
    state = reset(episode.meta.env_seed, cfg)
    for recorded in episode.steps:
        state = step(state, EnvAction.from_vector(recorded.action), cfg)
        if delivered(state, cfg):
            return True
    return False


__all__ = [
    "DEFAULT_DATASET",
    "collect_demonstrations",
    "collect_episode",
    "replay_episode",
]
