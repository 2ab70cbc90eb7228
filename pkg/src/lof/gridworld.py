"""Discrete gridworld environment: map loading, deterministic dynamics,
proposition labeling and reward composition.

Map files are plain text grids with an optional header:

    events: can=0.5
    costs: o=-1000 step=-1
    a....#...b
    ..S....o..

Legend: '.' empty, '#' impassable wall, 'o' traversable penalty cell,
'S' designated start cell, any other lowercase letter a subgoal (one cell
per subgoal).  The step reward is charged every action; safety costs are
charged on the cell being entered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

UP, DOWN, LEFT, RIGHT, STAY = range(5)
ACTIONS = (UP, DOWN, LEFT, RIGHT, STAY)
ACTION_NAMES = ("Up", "Down", "Left", "Right", "Stay")
_DELTAS = ((0, -1), (0, 1), (-1, 0), (1, 0), (0, 0))

EMPTY_PROP = "e"


class MapError(Exception):
    pass


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    walls: frozenset        # of (x, y)
    penalty_cells: frozenset
    subgoals: dict          # name -> (x, y)
    start: tuple | None = None

    def in_bounds(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and cell not in self.walls

    def free_cells(self):
        return [(x, y) for y in range(self.height) for x in range(self.width)
                if (x, y) not in self.walls]

    def subgoal_at(self, cell):
        for name, pos in self.subgoals.items():
            if pos == cell:
                return name
        return None


def load_map(text: str) -> GridMap:
    """Parse a character grid (no header lines) into a GridMap."""
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise MapError("empty map")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MapError(f"ragged map: row {i} has length {len(row)}, "
                           f"expected {width}")
    walls = set()
    penalty = set()
    subgoals = {}
    start = None
    for y, row in enumerate(rows):
        for x, ch in enumerate(row):
            if ch == ".":
                continue
            if ch == "#":
                walls.add((x, y))
            elif ch == "o":
                penalty.add((x, y))
            elif ch == "S":
                if start is not None:
                    raise MapError("duplicate start cell 'S'")
                start = (x, y)
            elif ch.isalpha() and ch.islower():
                if ch in subgoals:
                    raise MapError(f"duplicate subgoal {ch!r}")
                subgoals[ch] = (x, y)
            else:
                raise MapError(f"unknown map character {ch!r} at ({x},{y})")
    return GridMap(width=width, height=len(rows), walls=frozenset(walls),
                   penalty_cells=frozenset(penalty), subgoals=subgoals,
                   start=start)


def parse_map_file(text: str):
    """Split a map file into (grid text, event probabilities, costs)."""
    events = {}
    costs = {}
    grid_lines = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("events:"):
            for item in stripped[len("events:"):].split():
                name, _, prob = item.partition("=")
                events[name] = float(prob)
        elif stripped.startswith("costs:"):
            for item in stripped[len("costs:"):].split():
                name, _, value = item.partition("=")
                costs[name] = float(value)
        elif stripped:
            grid_lines.append(line.rstrip("\n"))
    return "\n".join(grid_lines), events, costs


@dataclass(frozen=True)
class EnvironmentMdp:
    """Low-level MDP: deterministic 4-connected moves plus Stay, a constant
    negative step reward, and safety costs charged on the entered cell."""
    grid: GridMap
    gamma: float = 1.0
    step_reward: float = -1.0
    safety_costs: dict = field(default_factory=lambda: {"o": -1000.0})
    event_probs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.step_reward < 0:
            raise MapError("step reward must be negative")
        if any(c > 0 for c in self.safety_costs.values()):
            raise MapError("safety costs must be <= 0")
        if not (0 < self.gamma <= 1):
            raise MapError("gamma must be in (0, 1]")

    # -- state space -------------------------------------------------------

    @property
    def states(self):
        return self.grid.free_cells()

    def state_index(self):
        return {cell: i for i, cell in enumerate(self.states)}

    @property
    def start(self):
        if self.grid.start is not None:
            return self.grid.start
        return self.states[0]

    # -- dynamics ----------------------------------------------------------

    def step(self, cell, action):
        dx, dy = _DELTAS[action]
        nxt = (cell[0] + dx, cell[1] + dy)
        if not self.grid.is_free(nxt):
            return cell
        return nxt

    def label(self, cell):
        """(subgoals_true, safety_true) at a cell; the empty proposition
        stands in when no penalty cell is occupied."""
        name = self.grid.subgoal_at(cell)
        subgoals = frozenset([name]) if name else frozenset()
        if cell in self.grid.penalty_cells:
            safety = frozenset(["o"])
        else:
            safety = frozenset([EMPTY_PROP])
        return subgoals, safety

    def reward(self, cell, action) -> float:
        nxt = self.step(cell, action)
        _, safety = self.label(nxt)
        return self.step_reward + sum(self.safety_costs.get(p, 0.0)
                                      for p in safety)


def make_env(text: str, gamma: float = 1.0) -> EnvironmentMdp:
    """Build an EnvironmentMdp from a full map file (header + grid)."""
    grid_text, events, costs = parse_map_file(text)
    grid = load_map(grid_text)
    step_reward = costs.pop("step", -1.0)
    safety_costs = {"o": -1000.0}
    safety_costs.update(costs)
    return EnvironmentMdp(grid=grid, gamma=gamma, step_reward=step_reward,
                          safety_costs=safety_costs, event_probs=events)


def sample_events(probs: Mapping[str, float], rng: np.random.Generator):
    """Independent Bernoulli draw per event proposition."""
    for p in probs.values():
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"event probability {p} outside [0, 1]")
    return {name: bool(rng.random() < p) for name, p in probs.items()}


def event_distribution(probs: Mapping[str, float]):
    """All event assignments with their probabilities T_PE(p_e)."""
    names = sorted(probs)
    out = []
    for bits in _bool_product(len(names)):
        assignment = dict(zip(names, bits))
        weight = 1.0
        for name, bit in assignment.items():
            weight *= probs[name] if bit else 1.0 - probs[name]
        if weight > 0.0:
            out.append((assignment, weight))
    return out


def _bool_product(n):
    if n == 0:
        return [()]
    rest = _bool_product(n - 1)
    return [(False,) + r for r in rest] + [(True,) + r for r in rest]


def reward_bounds(env: EnvironmentMdp):
    """Bounds on the combined per-step reward (used for sanity checks)."""
    worst = env.step_reward + min([0.0] + list(env.safety_costs.values()))
    return worst, env.step_reward
