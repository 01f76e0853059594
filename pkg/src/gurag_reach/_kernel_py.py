"""Pure-Python breadth-first search kernel over bit-packed states.

Reference implementation: arbitrary state width, no dependencies.  The
compiled kernel must produce byte-identical outcomes; request generation
order is fixed by the candidate list and the queue is strictly FIFO, so the
first goal hit yields the lexicographically smallest shortest plan.
"""

from __future__ import annotations

import time
from collections import deque
from typing import Optional

from .encoding import (
    OP_AND,
    OP_DIRECT_GROUP,
    OP_DIRECT_VAL,
    OP_EFF_GROUP,
    OP_EFF_VAL,
    OP_NOT,
    OP_TRUE,
    CompiledInstance,
    QueryEntry,
)

KERNEL_NAME = "python"

_TIME_CHECK_INTERVAL = 2048

# Outcome codes shared with the compiled kernel
REACHABLE = 0
UNREACHABLE = 1
DEPTH_EXCEEDED = 2
STATES_EXCEEDED = 3
MILLIS_EXCEEDED = 4


def _eff_group_bits(ci: CompiledInstance, state: int, j: int, smask: int) -> int:
    bits = 0
    for k in ci.closure_idx[j]:
        bits |= (state >> ci.seg_offsets[k]) & smask
    return bits


def _eff_user_bits(ci: CompiledInstance, state: int, smask: int) -> int:
    bits = state & smask
    mem = state >> ci.mem_offset
    for j in range(ci.n_groups):
        if mem >> j & 1:
            bits |= _eff_group_bits(ci, state, j, smask)
    return bits


def _run_program(ci, program, state, subject, smask, eff_cache):
    if subject < 0:
        direct = state & smask
    else:
        direct = (state >> ci.seg_offsets[subject]) & smask
    eff = None
    stack = []
    for op, arg in program:
        if op == OP_DIRECT_VAL:
            stack.append(direct >> arg & 1 == 1)
        elif op == OP_EFF_VAL:
            if eff is None:
                if subject < 0:
                    if eff_cache[0] is None:
                        eff_cache[0] = _eff_user_bits(ci, state, smask)
                    eff = eff_cache[0]
                else:
                    eff = _eff_group_bits(ci, state, subject, smask)
            stack.append(eff >> arg & 1 == 1)
        elif op == OP_AND:
            b = stack.pop()
            a = stack.pop()
            stack.append(a and b)
        elif op == OP_NOT:
            stack.append(not stack.pop())
        elif op == OP_TRUE:
            stack.append(True)
        elif op == OP_DIRECT_GROUP:
            stack.append(state >> (ci.mem_offset + arg) & 1 == 1)
        else:  # OP_EFF_GROUP
            mem = (state >> ci.mem_offset) & ((1 << ci.n_groups) - 1)
            stack.append(mem & ci.senior_mask[arg] != 0)
    return stack[-1]


def _goal_holds(ci, state, goal: tuple[QueryEntry, ...], strict: bool, smask: int) -> bool:
    eff = _eff_user_bits(ci, state, smask)
    for entry in goal:
        if strict:
            if eff & entry.mask != entry.target:
                return False
        else:
            if entry.target & ~eff:
                return False
    return True


def bfs(
    ci: CompiledInstance,
    start: int,
    goal: Optional[tuple[QueryEntry, ...]],
    strict: bool,
    max_depth: int,
    max_states: int,
    max_millis: int,
):
    """Run BFS from ``start``.

    With a goal: returns (code, plan as candidate-index list, states_explored).
    Without (enumeration mode): returns (code, list of (state, depth), count).
    """
    smask = ci.seg_mask()
    candidates = ci.candidates

    if goal is not None and _goal_holds(ci, start, goal, strict, smask):
        return REACHABLE, [], 1

    # discovery-ordered parallel arrays
    states = [start]
    parents = [-1]
    via = [-1]
    depths = [0]
    seen = {start: 0}
    queue = deque([0])
    deadline = time.monotonic() + max_millis / 1000.0
    depth_cut = False
    expanded = 0

    while queue:
        idx = queue.popleft()
        state = states[idx]
        depth = depths[idx]
        if depth >= max_depth:
            depth_cut = True
            continue
        expanded += 1
        if expanded % _TIME_CHECK_INTERVAL == 0 and time.monotonic() > deadline:
            return MILLIS_EXCEEDED, None, len(states)
        eff_cache = [None]
        for ci_idx, cand in enumerate(candidates):
            if cand.add:
                succ = state | (1 << cand.bit)
            else:
                succ = state & ~(1 << cand.bit)
            if succ == state or succ in seen:
                continue
            if not _run_program(ci, cand.program, state, cand.subject, smask, eff_cache):
                continue
            if len(states) >= max_states:
                return STATES_EXCEEDED, None, len(states)
            seen[succ] = len(states)
            states.append(succ)
            parents.append(idx)
            via.append(ci_idx)
            depths.append(depth + 1)
            if goal is not None and _goal_holds(ci, succ, goal, strict, smask):
                plan = []
                at = len(states) - 1
                while at > 0:
                    plan.append(via[at])
                    at = parents[at]
                plan.reverse()
                return REACHABLE, plan, len(states)
            queue.append(len(states) - 1)

    if goal is None:
        return (DEPTH_EXCEEDED if depth_cut else UNREACHABLE), list(zip(states, depths)), len(states)
    if depth_cut:
        return DEPTH_EXCEEDED, None, len(states)
    return UNREACHABLE, None, len(states)
