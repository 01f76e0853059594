"""Bounded explicit-state search: the ground-truth oracle.

The reachability problem is PSPACE-complete in general, so the exhaustive
search is bounded; Unreachable is only ever claimed when the full reachable
space was closed within the bounds.  The inner loop runs either in the
compiled kernel or the pure-Python fallback (see ``kernel``); both produce
identical outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import _kernel_py, kernel
from .encoding import compile_instance
from .model import DirectState, ProblemInstance, canonical_key
from .transition import Plan, ReachabilityQuery


@dataclass(frozen=True)
class SearchBounds:
    max_depth: int = 32
    max_states: int = 1 << 20
    max_millis: int = 30_000

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_states <= 0 or self.max_millis <= 0:
            raise ValueError("search bounds must be positive")


@dataclass(frozen=True)
class Reachable:
    plan: Plan
    states_explored: int


@dataclass(frozen=True)
class Unreachable:
    states_explored: int


@dataclass(frozen=True)
class BoundExceeded:
    bound: str  # "depth" | "states" | "millis"
    states_explored: int


SearchOutcome = Union[Reachable, Unreachable, BoundExceeded]

_BOUND_NAMES = {
    _kernel_py.DEPTH_EXCEEDED: "depth",
    _kernel_py.STATES_EXCEEDED: "states",
    _kernel_py.MILLIS_EXCEEDED: "millis",
}


def canonical_encode(state: DirectState) -> bytes:
    """Injective canonical key for a state; construction order never matters."""
    return canonical_key(state).encode("utf-8")


def bfs_solve(
    instance: ProblemInstance,
    q: ReachabilityQuery,
    bounds: SearchBounds = SearchBounds(),
    engine: Optional[str] = None,
) -> SearchOutcome:
    """Shortest plan (lexicographically smallest among shortest) or exhaustion.

    ``engine`` selects the kernel: None/"auto" picks the compiled one when it
    is available and applicable, "python" forces the fallback.
    """
    ci = compile_instance(instance)
    goal = ci.compile_query(q)
    start = ci.encode_state(instance.initial_state)
    impl = kernel.select(ci, engine)
    code, plan_idx, explored = impl.bfs(
        ci, start, goal, q.strict, bounds.max_depth, bounds.max_states, bounds.max_millis
    )
    if code == _kernel_py.REACHABLE:
        return Reachable(Plan(tuple(ci.candidates[i].request for i in plan_idx)), explored)
    if code == _kernel_py.UNREACHABLE:
        return Unreachable(explored)
    return BoundExceeded(_BOUND_NAMES[code], explored)


def enumerate_reachable(
    instance: ProblemInstance, bounds: SearchBounds = SearchBounds(), engine: Optional[str] = None
) -> dict[bytes, int]:
    """All states reachable within bounds, keyed canonically, with minimal depths."""
    ci = compile_instance(instance)
    start = ci.encode_state(instance.initial_state)
    impl = kernel.select(ci, engine)
    code, pairs, _ = impl.bfs(
        ci, start, None, False, bounds.max_depth, bounds.max_states, bounds.max_millis
    )
    if pairs is None:
        raise RuntimeError(f"enumeration exceeded the {_BOUND_NAMES[code]} bound")
    return {canonical_encode(ci.decode_state(s)): d for s, d in pairs}
