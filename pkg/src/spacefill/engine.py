"""Exact continuous-time simulation of the space-filling process.

Two equivalent state representations are provided. The pile view tracks
per-vertex stacks of particle identities, with every particle above the
bottom of its stack eligible to hop. The active/passive (A/B) view keeps
only what the dynamics needs: mobile A particles (pile members above a
bottom) and immobile B tokens marking empty vertices, annihilating
pairwise on contact. Both views evolve under the same stochastic law.

All A particles hop at overall rate 1, so one exponential clock of rate
m (the current A count) followed by a uniform choice of particle and
neighbor reproduces the exact chain with O(1) work per event. The A/B
hot loop is JIT-compiled; the pile engine is plain Python and intended
for small graphs and cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graphs import RegularGraph

__all__ = [
    "ABState",
    "PileState",
    "HaltingSample",
    "TraceObserver",
    "EngineAbort",
    "DEFAULT_EVENT_CEILING",
    "init_uncorrelated",
    "init_localized",
    "init_uncorrelated_piles",
    "init_localized_piles",
    "run_to_halt",
    "run_to_halt_piles",
    "sample_complete_fast",
    "sample_m0_uncorrelated",
    "observe_m_trace",
]

DEFAULT_EVENT_CEILING = 10**10

_HALTED, _TMAX_REACHED, _CEILING_HIT = 0, 1, 2


class EngineAbort(RuntimeError):
    """Run exceeded its event ceiling."""


@dataclass
class HaltingSample:
    """Outcome of one replica run to halting.

    T is the halting time, t_last the time spent with exactly one empty
    vertex before the final annihilation, m0 the initial empty count,
    events the number of hops executed (the exact-transition fast path
    counts transitions instead), and seed a caller-supplied stream label.
    """

    T: float
    t_last: float
    m0: int
    events: int
    seed: int


@dataclass
class ABState:
    """Annihilation-view state: A positions plus the set of B vertices."""

    a_count: np.ndarray  # (V,) int64, A particles per vertex
    a_index: np.ndarray  # flat positions of all A particles; first m entries live
    b_mask: np.ndarray   # (V,) bool, True where a B particle sits
    m: int
    clock: float

    @property
    def b_set(self) -> set[int]:
        return set(np.flatnonzero(self.b_mask).tolist())

    def check_consistency(self, graph: RegularGraph) -> None:
        V = graph.V
        if self.a_count.shape != (V,) or self.b_mask.shape != (V,):
            raise ValueError("state arrays do not match graph size")
        if int(self.b_mask.sum()) != self.m:
            raise ValueError("B count disagrees with m")
        if int(self.a_count.sum()) != self.m:
            raise ValueError("A count disagrees with m (species counts must stay equal)")
        if np.any(self.a_count[self.b_mask] > 0):
            raise ValueError("A and B particles share a vertex")
        live = np.sort(self.a_index[: self.m])
        expect = np.sort(np.repeat(np.arange(V), self.a_count))
        if not np.array_equal(live, expect):
            raise ValueError("a_index does not match a_count")


@dataclass
class PileState:
    """Pile-view state: per-vertex stacks of particle ids, bottom first."""

    stacks: list[list[int]]
    clock: float

    def particle_total(self) -> int:
        return sum(len(s) for s in self.stacks)

    def empty_count(self) -> int:
        return sum(1 for s in self.stacks if not s)


class TraceObserver:
    """Records the empty-vertex count m on a fixed time grid.

    The value stored for grid time g is the one in force immediately
    before the first event after g. Entries never reached by a run stay
    at -1; after halting the count is 0 forever, so remaining entries
    are filled with 0.
    """

    def __init__(self, grid) -> None:
        grid = np.asarray(grid, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a nonempty 1-d sequence")
        if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
            raise ValueError("grid times must be nonnegative and strictly increasing")
        self.grid = grid
        self.values = np.full(grid.size, -1, dtype=np.int64)

    def reset(self) -> None:
        self.values.fill(-1)


def observe_m_trace(grid) -> TraceObserver:
    """Observer recording m at each grid time; attachable to any run."""
    return TraceObserver(grid)


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------

def _ab_from_occupancy(counts: np.ndarray, clock: float = 0.0) -> ABState:
    b_mask = counts == 0
    m = int(b_mask.sum())
    a_count = np.maximum(counts - 1, 0).astype(np.int64)
    a_index = np.repeat(np.arange(counts.size, dtype=np.int64), a_count)
    return ABState(a_count=a_count, a_index=a_index, b_mask=b_mask, m=m, clock=clock)


def init_uncorrelated(graph: RegularGraph, rng: np.random.Generator) -> ABState:
    """V particles dropped independently uniformly over the V vertices."""
    V = graph.V
    counts = np.bincount(rng.integers(0, V, size=V), minlength=V).astype(np.int64)
    return _ab_from_occupancy(counts)


def init_localized(graph: RegularGraph, vertex: int) -> ABState:
    """All V particles stacked on one vertex: V-1 active, V-1 empty."""
    V = graph.V
    if not 0 <= vertex < V:
        raise ValueError(f"vertex {vertex} out of range [0, {V})")
    counts = np.zeros(V, dtype=np.int64)
    counts[vertex] = V
    return _ab_from_occupancy(counts)


def init_uncorrelated_piles(graph: RegularGraph, rng: np.random.Generator) -> PileState:
    """Pile view of the uncorrelated start; stacking follows arrival order."""
    V = graph.V
    stacks: list[list[int]] = [[] for _ in range(V)]
    for p, v in enumerate(rng.integers(0, V, size=V).tolist()):
        stacks[v].append(p)
    return PileState(stacks=stacks, clock=0.0)


def init_localized_piles(graph: RegularGraph, vertex: int) -> PileState:
    V = graph.V
    if not 0 <= vertex < V:
        raise ValueError(f"vertex {vertex} out of range [0, {V})")
    stacks: list[list[int]] = [[] for _ in range(V)]
    stacks[vertex] = list(range(V))
    return PileState(stacks=stacks, clock=0.0)


def sample_m0_uncorrelated(V: int, rng: np.random.Generator) -> int:
    """Initial empty-vertex count of an uncorrelated start, without the full state."""
    counts = np.bincount(rng.integers(0, V, size=V), minlength=V)
    return int(np.sum(counts == 0))


# ---------------------------------------------------------------------------
# A/B event loop (JIT kernel)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _ab_kernel(neighbors, complete_V, a_count, a_index, b_mask, m, clock,
               grid, grid_out, t_max, event_cap, t_enter1, rng):
    r = neighbors.shape[1]
    events = 0
    gi = 0
    n_grid = grid.shape[0]
    while gi < n_grid and grid_out[gi] >= 0:
        gi += 1
    while m > 0:
        u = rng.random()
        new_clock = clock + (-math.log1p(-u) / m)
        while gi < n_grid and grid[gi] < new_clock:
            grid_out[gi] = m
            gi += 1
        if new_clock >= t_max:
            # state is reported as of t_max; the pending event never happens
            return _TMAX_REACHED, t_max, t_enter1, events, m
        clock = new_clock
        if events >= event_cap:
            return _CEILING_HIT, clock, t_enter1, events, m
        events += 1
        i = int(rng.random() * m)
        uv = a_index[i]
        if complete_V > 0:
            w = int(rng.random() * (complete_V - 1))
            if w >= uv:
                w += 1
        else:
            w = neighbors[uv, int(rng.random() * r)]
        if b_mask[w]:
            b_mask[w] = False
            a_count[uv] -= 1
            m -= 1
            a_index[i] = a_index[m]
            if m == 1:
                t_enter1 = clock
        else:
            a_count[uv] -= 1
            a_count[w] += 1
            a_index[i] = w
    while gi < n_grid:
        grid_out[gi] = 0
        gi += 1
    return _HALTED, clock, t_enter1, events, m


_EMPTY_GRID = np.empty(0, dtype=np.float64)
_EMPTY_OUT = np.empty(0, dtype=np.int64)
_DUMMY_NEIGHBORS = np.zeros((1, 1), dtype=np.int64)


def run_to_halt(
    graph: RegularGraph,
    state: ABState,
    rng: np.random.Generator,
    observer: TraceObserver | None = None,
    *,
    t_max: float = math.inf,
    event_ceiling: int = DEFAULT_EVENT_CEILING,
    seed: int = 0,
) -> HaltingSample | None:
    """Run the A/B chain until every vertex is singly occupied.

    The state is advanced in place. Returns the halting sample, or None
    when t_max cuts the run short (the observer, if any, still holds the
    recorded trace). Raises EngineAbort if the event ceiling is hit.
    """
    if graph.is_complete:
        neighbors, complete_V = _DUMMY_NEIGHBORS, graph.V
    else:
        neighbors, complete_V = graph.neighbors, 0
    grid = observer.grid if observer is not None else _EMPTY_GRID
    grid_out = observer.values if observer is not None else _EMPTY_OUT
    m0 = state.m
    status, clock, t_enter1, events, m = _ab_kernel(
        neighbors, complete_V, state.a_count, state.a_index, state.b_mask,
        state.m, state.clock, grid, grid_out, t_max, event_ceiling,
        state.clock, rng,
    )
    state.m = int(m)
    state.clock = float(clock)
    if status == _CEILING_HIT:
        raise EngineAbort(
            f"event ceiling {event_ceiling} reached at t={clock:.6g} with m={m}"
        )
    if status == _TMAX_REACHED:
        return None
    return HaltingSample(T=float(clock), t_last=float(clock - t_enter1),
                         m0=m0, events=int(events), seed=seed)


# ---------------------------------------------------------------------------
# pile event loop (reference implementation)
# ---------------------------------------------------------------------------

def run_to_halt_piles(
    graph: RegularGraph,
    pile_state: PileState,
    rng: np.random.Generator,
    observer: TraceObserver | None = None,
    *,
    t_max: float = math.inf,
    event_ceiling: int = DEFAULT_EVENT_CEILING,
    seed: int = 0,
) -> HaltingSample | None:
    """Run the pile view to halting under the identical stochastic law.

    A uniformly chosen eligible particle (any non-bottom member of any
    stack) hops to a uniform neighbor and lands on top of the target
    stack; the order of the remaining stack is preserved.
    """
    if pile_state.particle_total() != graph.V:
        raise ValueError("pile state must hold exactly V particles")
    stacks = pile_state.stacks
    V = graph.V
    pvert = [0] * V
    eligible: list[int] = []
    for v, stack in enumerate(stacks):
        for depth, p in enumerate(stack):
            pvert[p] = v
            if depth > 0:
                eligible.append(p)
    m0 = pile_state.empty_count()
    if len(eligible) != m0:
        raise ValueError("eligible-particle count must equal empty-vertex count")

    clock = pile_state.clock
    t_enter1 = clock
    events = 0
    grid = observer.grid.tolist() if observer is not None else []
    gi = 0
    complete = graph.is_complete
    nbr = graph.neighbors
    r = graph.r
    random = rng.random

    while eligible:
        n_el = len(eligible)
        new_clock = clock + (-math.log1p(-random()) / n_el)
        while gi < len(grid) and grid[gi] < new_clock:
            observer.values[gi] = n_el
            gi += 1
        if new_clock >= t_max:
            pile_state.clock = t_max
            return None
        clock = new_clock
        if events >= event_ceiling:
            pile_state.clock = clock
            raise EngineAbort(
                f"event ceiling {event_ceiling} reached at t={clock:.6g}"
            )
        events += 1
        i = int(random() * n_el)
        p = eligible[i]
        u = pvert[p]
        if complete:
            w = int(random() * (V - 1))
            if w >= u:
                w += 1
        else:
            w = int(nbr[u, int(random() * r)])
        stacks[u].remove(p)
        target = stacks[w]
        if not target:
            # lands alone: becomes the stuck bottom of the target vertex
            eligible[i] = eligible[-1]
            eligible.pop()
            if len(eligible) == 1:
                t_enter1 = clock
        target.append(p)
        pvert[p] = w

    while observer is not None and gi < len(grid):
        observer.values[gi] = 0
        gi += 1
    pile_state.clock = clock
    return HaltingSample(T=clock, t_last=clock - t_enter1, m0=m0,
                         events=events, seed=seed)


# ---------------------------------------------------------------------------
# exact transition-time sampler for complete graphs
# ---------------------------------------------------------------------------

def sample_complete_fast(
    N: int, m0: int, rng: np.random.Generator, *, seed: int = 0
) -> HaltingSample:
    """Sample the halting time on K_{N+1} directly from transition times.

    T is the independent sum of Exp(m^2/N) over m = 1..m0 and t_last is
    the m = 1 summand; the events field counts transitions, not hops.
    """
    if m0 < 1:
        raise ValueError(f"m0 must be >= 1, got {m0}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    m = np.arange(1, m0 + 1, dtype=np.float64)
    durations = rng.exponential(scale=N / m**2)
    return HaltingSample(
        T=float(durations.sum()),
        t_last=float(durations[0]),
        m0=m0,
        events=m0,
        seed=seed,
    )
