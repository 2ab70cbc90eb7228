"""Shared fixtures: the packaged environments, exactly optimal option
bundles, and the four task automata."""

import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from lof import (  # noqa: E402
    EventModel,
    harness,
    optimal_option,
)
from lof.gridworld import make_env  # noqa: E402


@pytest.fixture(scope="session")
def delivery_env():
    return make_env(harness.resolve_map_text("delivery"))


@pytest.fixture(scope="session")
def scenario_env():
    return make_env(harness.resolve_map_text("scenario"))


@pytest.fixture(scope="session")
def delivery_options(delivery_env):
    """Exactly optimal options for the delivery map (value iteration, not
    sampling, so they carry no seed noise)."""
    return {name: optimal_option(delivery_env, name)
            for name in sorted(delivery_env.grid.subgoals)}


@pytest.fixture(scope="session")
def scenario_options(scenario_env):
    return {name: optimal_option(scenario_env, name)
            for name in sorted(scenario_env.grid.subgoals)}


@pytest.fixture(scope="session")
def task_fsas():
    return {name: harness.task_fsa(name) for name in harness.TASKS}


@pytest.fixture(scope="session")
def delivery_events(delivery_env):
    return EventModel.bernoulli(delivery_env.event_probs)
