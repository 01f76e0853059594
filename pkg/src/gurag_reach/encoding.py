"""Bit-level compilation of a problem instance for the search kernels.

A direct state is packed into one integer: an S-bit value segment for the user,
one S-bit segment per group (same attribute layout), then one membership bit
per group.  Preconditions compile to small postfix programs over bit tests, and
every rule expands into concrete candidate requests sorted deterministically.
Both the pure-Python and the compiled kernel consume this representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import DirectState, ProblemInstance
from .policy import (
    And,
    DirectGroup,
    DirectVal,
    EffGroup,
    EffVal,
    Not,
    Precondition,
    Relation,
    TrueCond,
)
from .transition import ReachabilityQuery, Request

# Postfix opcodes
OP_TRUE = 0
OP_NOT = 1
OP_AND = 2
OP_DIRECT_VAL = 3   # arg: slot within subject segment
OP_EFF_VAL = 4      # arg: slot within subject segment
OP_DIRECT_GROUP = 5  # arg: group index
OP_EFF_GROUP = 6     # arg: group index


@dataclass(frozen=True)
class Candidate:
    """One concrete request a rule can authorize, plus its compiled guard."""
    bit: int              # absolute bit index toggled by the request
    add: bool             # set vs clear
    subject: int          # -1 = user, else group index (segment for the guard)
    program: tuple[tuple[int, int], ...]
    rule_id: int
    request: Request


@dataclass(frozen=True)
class QueryEntry:
    mask: int     # attribute's slot mask within an S-bit segment
    target: int   # required bits within that mask


@dataclass
class CompiledInstance:
    atts: tuple[str, ...]
    groups: tuple[str, ...]
    slot: dict[tuple[str, str], int]
    att_spans: dict[str, tuple[int, int]]    # att -> (slot offset, width)
    n_slots: int                             # S: total scope values
    n_groups: int
    nbits: int
    mem_offset: int
    seg_offsets: tuple[int, ...]             # per group index
    closure_idx: tuple[tuple[int, ...], ...]  # junior closure, as group indices
    senior_mask: tuple[int, ...]             # membership mask of groups senior-or-equal
    candidates: tuple[Candidate, ...]

    def seg_mask(self) -> int:
        return (1 << self.n_slots) - 1

    def encode_state(self, state: DirectState) -> int:
        bits = 0
        for att, vals in state.user_attrs.items():
            for val in vals:
                bits |= 1 << self.slot[att, val]
        for g, attrs in state.group_attrs.items():
            off = self.seg_offsets[self.groups.index(g)]
            for att, vals in attrs.items():
                for val in vals:
                    bits |= 1 << (off + self.slot[att, val])
        for g in state.user_groups:
            bits |= 1 << (self.mem_offset + self.groups.index(g))
        return bits

    def decode_state(self, bits: int) -> DirectState:
        rev = {idx: pair for pair, idx in self.slot.items()}

        def segment(off):
            seg = (bits >> off) & self.seg_mask()
            out: dict[str, set[str]] = {}
            for i in range(self.n_slots):
                if seg >> i & 1:
                    att, val = rev[i]
                    out.setdefault(att, set()).add(val)
            return out

        groups = frozenset(
            g for j, g in enumerate(self.groups) if bits >> (self.mem_offset + j) & 1
        )
        group_attrs = {}
        for j, g in enumerate(self.groups):
            seg = segment(self.seg_offsets[j])
            if seg:
                group_attrs[g] = seg
        return DirectState(segment(0), group_attrs, groups)

    def compile_query(self, q: ReachabilityQuery) -> tuple[QueryEntry, ...]:
        entries = []
        for att, vset in q.entries.items():
            off, width = self.att_spans[att]
            mask = ((1 << width) - 1) << off
            target = 0
            for val in vset:
                target |= 1 << self.slot[att, val]
            entries.append(QueryEntry(mask, target))
        return tuple(entries)


def _compile_pre(pre: Precondition, ci_slot, gidx) -> tuple[tuple[int, int], ...]:
    ops: list[tuple[int, int]] = []

    def emit(node: Precondition):
        if isinstance(node, TrueCond):
            ops.append((OP_TRUE, 0))
        elif isinstance(node, Not):
            emit(node.child)
            ops.append((OP_NOT, 0))
        elif isinstance(node, And):
            emit(node.left)
            emit(node.right)
            ops.append((OP_AND, 0))
        elif isinstance(node, DirectVal):
            ops.append((OP_DIRECT_VAL, ci_slot[node.att, node.val]))
        elif isinstance(node, EffVal):
            ops.append((OP_EFF_VAL, ci_slot[node.att, node.val]))
        elif isinstance(node, DirectGroup):
            ops.append((OP_DIRECT_GROUP, gidx[node.group]))
        elif isinstance(node, EffGroup):
            ops.append((OP_EFF_GROUP, gidx[node.group]))
        else:  # pragma: no cover
            raise TypeError(f"unknown precondition node {node!r}")

    emit(pre)
    return tuple(ops)


def compile_instance(instance: ProblemInstance) -> CompiledInstance:
    atts = tuple(sorted(instance.scopes))
    slot: dict[tuple[str, str], int] = {}
    att_spans: dict[str, tuple[int, int]] = {}
    cursor = 0
    for att in atts:
        vals = sorted(instance.scopes[att])
        att_spans[att] = (cursor, len(vals))
        for val in vals:
            slot[att, val] = cursor
            cursor += 1
    n_slots = cursor

    groups = tuple(sorted(instance.groups))
    gidx = {g: j for j, g in enumerate(groups)}
    n_groups = len(groups)
    seg_offsets = tuple(n_slots * (1 + j) for j in range(n_groups))
    mem_offset = n_slots * (1 + n_groups)
    nbits = mem_offset + n_groups

    closure_idx = tuple(
        tuple(sorted(gidx[j] for j in instance.hierarchy.junior_closure(g)))
        for g in groups
    )
    senior_mask = []
    for j in range(n_groups):
        mask = 0
        for k in range(n_groups):
            if j in closure_idx[k]:
                mask |= 1 << k
        senior_mask.append(mask)

    candidates: list[Candidate] = []
    for rule in instance.rules:
        program = _compile_pre(rule.pre, slot, gidx)
        rel = rule.relation
        if rel in (Relation.ADD_U, Relation.DELETE_U):
            candidates.append(Candidate(
                bit=slot[rule.target_attr, rule.target_val],
                add=(rel == Relation.ADD_U),
                subject=-1,
                program=program,
                rule_id=rule.rule_id,
                request=Request(rel, rule.role, att=rule.target_attr, val=rule.target_val),
            ))
        elif rel in (Relation.ADD_UG, Relation.DELETE_UG):
            for g in groups:
                candidates.append(Candidate(
                    bit=seg_offsets[gidx[g]] + slot[rule.target_attr, rule.target_val],
                    add=(rel == Relation.ADD_UG),
                    subject=gidx[g],
                    program=program,
                    rule_id=rule.rule_id,
                    request=Request(rel, rule.role, att=rule.target_attr,
                                    val=rule.target_val, group=g),
                ))
        else:
            candidates.append(Candidate(
                bit=mem_offset + gidx[rule.target_group],
                add=(rel == Relation.ASSIGN),
                subject=-1,
                program=program,
                rule_id=rule.rule_id,
                request=Request(rel, rule.role, group=rule.target_group),
            ))
    candidates.sort(key=lambda c: (c.request.sort_key, c.rule_id))

    return CompiledInstance(
        atts=atts,
        groups=groups,
        slot=slot,
        att_spans=att_spans,
        n_slots=n_slots,
        n_groups=n_groups,
        nbits=nbits,
        mem_offset=mem_offset,
        seg_offsets=seg_offsets,
        closure_idx=closure_idx,
        senior_mask=tuple(senior_mask),
        candidates=tuple(candidates),
    )
