"""Static model and direct state: attributes, scopes, group hierarchy, effective values.

Attribute names, atomic values, group ids and role names are opaque
case-sensitive tokens.  Tokens that look numeric ("2.03") are still compared
as strings.  All containers are frozen after construction; every operation in
this module is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping


class ModelError(ValueError):
    """Raised for malformed inputs: unknown references, cyclic hierarchies."""


def _freeze_sets(mapping: Mapping[str, Iterable[str]]) -> dict[str, frozenset[str]]:
    # An empty value set and an absent entry are the same thing; drop empties
    # so equality and canonical encodings do not depend on representation.
    out = {}
    for key in sorted(mapping):
        vals = frozenset(mapping[key])
        if vals:
            out[key] = vals
    return out


@dataclass(frozen=True)
class GroupHierarchy:
    """Seniority partial order over groups, given as direct (senior, junior) edges.

    The reflexive-transitive closure is computed internally; cyclic input is
    rejected because the closure must be a partial order.
    """

    groups: frozenset[str]
    direct_seniority: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "groups", frozenset(self.groups))
        object.__setattr__(self, "direct_seniority", frozenset(self.direct_seniority))
        for senior, junior in self.direct_seniority:
            for g in (senior, junior):
                if g not in self.groups:
                    raise ModelError(f"hierarchy references unknown group {g!r}")
        self._closures  # force cycle detection at construction time

    @cached_property
    def _juniors(self) -> dict[str, frozenset[str]]:
        direct: dict[str, set[str]] = {g: set() for g in self.groups}
        for senior, junior in self.direct_seniority:
            if senior != junior:
                direct[senior].add(junior)
        return {g: frozenset(js) for g, js in direct.items()}

    @cached_property
    def _closures(self) -> dict[str, frozenset[str]]:
        closures: dict[str, frozenset[str]] = {}
        visiting: set[str] = set()

        def close(g: str) -> frozenset[str]:
            if g in closures:
                return closures[g]
            if g in visiting:
                raise ModelError(f"cycle in group hierarchy through {g!r}")
            visiting.add(g)
            acc = {g}
            for junior in self._juniors[g]:
                acc |= close(junior)
            visiting.discard(g)
            closures[g] = frozenset(acc)
            return closures[g]

        for g in self.groups:
            close(g)
        return closures

    def junior_closure(self, g: str) -> frozenset[str]:
        """All groups the given group is senior to, reflexively and transitively."""
        try:
            return self._closures[g]
        except KeyError:
            raise ModelError(f"unknown group {g!r}") from None


@dataclass(frozen=True)
class DirectState:
    """The direct assignments for the single analyzed user and all groups.

    ``user_attrs``  maps attribute -> set of directly held values,
    ``group_attrs`` maps group -> attribute -> set of directly held values,
    ``user_groups`` is the set of groups the user is directly a member of.
    """

    user_attrs: Mapping[str, frozenset[str]] = field(default_factory=dict)
    group_attrs: Mapping[str, Mapping[str, frozenset[str]]] = field(default_factory=dict)
    user_groups: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "user_attrs", _freeze_sets(self.user_attrs))
        gattrs = {}
        for g in sorted(self.group_attrs):
            frozen = _freeze_sets(self.group_attrs[g])
            if frozen:
                gattrs[g] = frozen
        object.__setattr__(self, "group_attrs", gattrs)
        object.__setattr__(self, "user_groups", frozenset(self.user_groups))

    def user_values(self, att: str) -> frozenset[str]:
        return self.user_attrs.get(att, frozenset())

    def group_values(self, g: str, att: str) -> frozenset[str]:
        return self.group_attrs.get(g, {}).get(att, frozenset())

    def __hash__(self):
        return hash(canonical_key(self))


def canonical_key(state: DirectState) -> str:
    """Canonical, injective rendering of a state; equal states get equal keys."""
    parts = []
    for att in sorted(state.user_attrs):
        parts.append("u." + att + "=" + ",".join(sorted(state.user_attrs[att])))
    for g in sorted(state.group_attrs):
        for att in sorted(state.group_attrs[g]):
            parts.append(g + "." + att + "=" + ",".join(sorted(state.group_attrs[g][att])))
    parts.append("member=" + ",".join(sorted(state.user_groups)))
    return "|".join(parts)


def effective_groups(state: DirectState, hierarchy: GroupHierarchy) -> frozenset[str]:
    """Groups held directly plus everything junior to them."""
    acc: set[str] = set()
    for g in state.user_groups:
        acc |= hierarchy.junior_closure(g)
    return frozenset(acc)


def effective_group_attr(
    state: DirectState, hierarchy: GroupHierarchy, g: str, att: str
) -> frozenset[str]:
    """A group's direct values unioned with the effective values of its juniors."""
    acc: set[str] = set()
    for junior in hierarchy.junior_closure(g):
        acc |= state.group_values(junior, att)
    return frozenset(acc)


def effective_user_attr(state: DirectState, hierarchy: GroupHierarchy, att: str) -> frozenset[str]:
    """The user's direct values plus everything inherited via direct groups."""
    acc = set(state.user_values(att))
    for g in state.user_groups:
        acc |= effective_group_attr(state, hierarchy, g, att)
    return frozenset(acc)


@dataclass(frozen=True)
class ProblemInstance:
    """One fully specified analysis input: scopes, hierarchy, roles, rules, start state."""

    scopes: Mapping[str, frozenset[str]]
    hierarchy: GroupHierarchy
    roles: frozenset[str]
    rules: "RuleSet"  # gurag_reach.policy.RuleSet
    initial_state: DirectState

    def __post_init__(self):
        object.__setattr__(
            self, "scopes", {a: frozenset(vs) for a, vs in sorted(self.scopes.items())}
        )
        object.__setattr__(self, "roles", frozenset(self.roles))

    @property
    def groups(self) -> frozenset[str]:
        return self.hierarchy.groups

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(sorted(self.scopes))


def validate_instance(instance: ProblemInstance) -> list[str]:
    """Check every cross-reference and invariant; returns human-readable violations.

    An empty list means the instance is well formed.  Errors are data, not
    exceptions, so callers can report all problems at once.
    """
    problems: list[str] = []
    scopes = instance.scopes
    groups = instance.groups

    for att, scope in scopes.items():
        if not scope:
            problems.append(f"attribute {att!r} has an empty scope")

    def check_values(where: str, att: str, vals: Iterable[str]):
        if att not in scopes:
            problems.append(f"{where}: unknown attribute {att!r}")
            return
        for val in sorted(vals):
            if val not in scopes[att]:
                problems.append(f"{where}: value {val!r} outside scope of {att!r}")

    state = instance.initial_state
    for att, vals in state.user_attrs.items():
        check_values("user state", att, vals)
    for g, attrs in state.group_attrs.items():
        if g not in groups:
            problems.append(f"group state: unknown group {g!r}")
        for att, vals in attrs.items():
            check_values(f"group state of {g!r}", att, vals)
    for g in sorted(state.user_groups):
        if g not in groups:
            problems.append(f"user membership: unknown group {g!r}")

    for rule in instance.rules:
        where = f"rule #{rule.rule_id}"
        if rule.role not in instance.roles:
            problems.append(f"{where}: unknown role {rule.role!r}")
        if rule.target_attr is not None:
            check_values(where, rule.target_attr, [rule.target_val])
        if rule.target_group is not None and rule.target_group not in groups:
            problems.append(f"{where}: unknown group {rule.target_group!r}")
        for node in rule.pre.walk():
            kind = type(node).__name__
            if kind in ("DirectVal", "EffVal"):
                check_values(f"{where} precondition", node.att, [node.val])
            elif kind in ("DirectGroup", "EffGroup"):
                if node.group not in groups:
                    problems.append(f"{where} precondition: unknown group {node.group!r}")
                if not rule.relation.is_membership:
                    problems.append(
                        f"{where}: group membership literal outside an assign/remove rule"
                    )
    return problems
