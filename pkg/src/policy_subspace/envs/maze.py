"""Walled 2-d grid maze with a 5x5 local wall observation.

Layouts are plain-text grids: ``#`` wall, ``.`` free, ``S`` start, ``G`` goal.
Cells outside the grid count as walls.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .base import Family, register_family

# up, down, left, right
MOVES = np.array([(-1, 0), (1, 0), (0, -1), (0, 1)])
WINDOW = 5
HORIZON = 100
# walled test environments #1-#4
TEST_SEEDS = {"test1": 1, "test2": 2, "test3": 3, "test4": 4}


@dataclass(frozen=True)
class Layout:
    walls: np.ndarray          # (H, W) bool
    start: tuple[int, int]
    goal: tuple[int, int]

    @classmethod
    def parse(cls, text: str) -> "Layout":
        rows = [r for r in text.strip("\n").splitlines()]
        if len({len(r) for r in rows}) != 1:
            raise ValueError("layout rows must have equal width")
        walls = np.array([[ch == "#" for ch in r] for r in rows])
        start = goal = None
        for i, r in enumerate(rows):
            for j, ch in enumerate(r):
                if ch not in "#.SG":
                    raise ValueError(f"bad layout character {ch!r}")
                if ch == "S":
                    start = (i, j)
                elif ch == "G":
                    goal = (i, j)
        if start is None or goal is None:
            raise ValueError("layout needs one S and one G")
        return cls(walls, start, goal)

    def render(self, marks: dict[tuple[int, int], str] | None = None) -> str:
        lines = []
        for i, row in enumerate(self.walls):
            chars = []
            for j, w in enumerate(row):
                ch = "#" if w else "."
                if (i, j) == self.start:
                    ch = "S"
                elif (i, j) == self.goal:
                    ch = "G"
                if marks and (i, j) in marks:
                    ch = marks[(i, j)]
                chars.append(ch)
            lines.append("".join(chars))
        return "\n".join(lines) + "\n"

    @property
    def shape(self) -> tuple[int, int]:
        return self.walls.shape

    def free(self, cell) -> bool:
        r, c = cell
        h, w = self.walls.shape
        return 0 <= r < h and 0 <= c < w and not self.walls[r, c]


def bfs_distances(layout: Layout, source: tuple[int, int]) -> dict[tuple[int, int], int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        cell = queue.popleft()
        for dr, dc in MOVES:
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt not in dist and layout.free(nxt):
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def shortest_path_length(layout: Layout) -> int | None:
    return bfs_distances(layout, layout.start).get(layout.goal)


@lru_cache(maxsize=None)
def load_layout(name: str = "corridor") -> Layout:
    text = resources.files(__package__).joinpath("layouts", f"{name}.txt").read_text()
    return Layout.parse(text)


@lru_cache(maxsize=None)
def walled_layout(seed: int, base: str = "corridor") -> Layout:
    """Drop 1-4 short wall segments onto optimal routes of ``base``.

    Draws are rejected until every optimal route of the base layout is cut
    while the goal stays reachable within the horizon.
    """
    layout = load_layout(base)
    best = shortest_path_length(layout)
    ds, dg = bfs_distances(layout, layout.start), bfs_distances(layout, layout.goal)
    on_route = sorted(c for c in ds if c in dg and ds[c] + dg[c] == best
                      and c not in (layout.start, layout.goal))
    rng = np.random.default_rng(seed)
    while True:
        walls = layout.walls.copy()
        for _ in range(rng.integers(1, 5)):
            r, c = on_route[rng.integers(len(on_route))]
            dr, dc = (0, 1) if rng.random() < 0.5 else (1, 0)
            for k in range(rng.integers(1, 3)):
                cell = (r + k * dr, c + k * dc)
                if layout.free(cell) and cell not in (layout.start, layout.goal):
                    walls[cell] = True
        candidate = Layout(walls, layout.start, layout.goal)
        d = shortest_path_length(candidate)
        if d is not None and best < d <= HORIZON:
            return candidate


def observation_table(layout: Layout) -> np.ndarray:
    """(H, W, 25) row-major 5x5 wall windows centred on each cell."""
    half = WINDOW // 2
    padded = np.pad(layout.walls, half, constant_values=True).astype(np.float64)
    h, w = layout.shape
    table = np.empty((h, w, WINDOW * WINDOW))
    for r in range(h):
        for c in range(w):
            table[r, c] = padded[r:r + WINDOW, c:c + WINDOW].ravel()
    return table


@register_family
class Maze2d(Family):
    name = "Maze2d"
    obs_dim = WINDOW * WINDOW
    action_kind = "discrete"
    n_actions = 4
    horizon = HORIZON
    deterministic = True
    knobs = {"layout": "corridor", "wall_seed": None}
    variants = {"train": {}, **{k: {"wall_seed": s} for k, s in TEST_SEEDS.items()}}

    def __init__(self, variant):
        super().__init__(variant)
        seed = self.p["wall_seed"]
        self.layout = (load_layout(self.p["layout"]) if seed is None
                       else walled_layout(seed, self.p["layout"]))
        self._obs = observation_table(self.layout)
        self._goal = np.array(self.layout.goal)

    def reset_state(self, rng):
        return np.array(self.layout.start, dtype=np.float64)

    def step_batch(self, states, actions):
        cells = states.astype(np.int64)
        target = cells + MOVES[actions]
        h, w = self.layout.shape
        inside = (target[:, 0] >= 0) & (target[:, 0] < h) & (target[:, 1] >= 0) & (target[:, 1] < w)
        ok = inside.copy()
        ok[inside] = ~self.layout.walls[target[inside, 0], target[inside, 1]]
        cells = np.where(ok[:, None], target, cells)
        reached = np.all(cells == self._goal, axis=1)
        return cells.astype(np.float64), -np.ones(len(states)), reached

    def observe(self, states):
        cells = states.astype(np.int64)
        return self._obs[cells[:, 0], cells[:, 1]].copy()


def trace_path(variant, act) -> list[tuple[int, int]]:
    """Cells visited by one episode of the deterministic ``act(obs)``."""
    dyn = variant.dynamics()
    if not isinstance(dyn, Maze2d):
        raise ValueError("trace_path needs a Maze2d variant")
    state = dyn.reset_state(None)[None]
    path = [tuple(int(v) for v in state[0])]
    for _ in range(variant.horizon):
        obs = dyn.observe(state)
        if variant.obs_mask:
            obs[:, list(variant.obs_mask)] = 0.0
        state, _, reached = dyn.step_batch(state, np.asarray(act(obs)))
        path.append(tuple(int(v) for v in state[0]))
        if reached[0]:
            break
    return path


def render_path(layout: Layout, path) -> str:
    """Text grid with visited cells drawn as ``o``."""
    marks = {cell: "o" for cell in path[1:-1] if cell not in (layout.start, layout.goal)}
    return layout.render(marks)
