"""Administrative rules: precondition formulas, the six relations, classifiers.

A rule set is classified along two independent axes: its *level* (whether
preconditions may mention attributes other than the rule's own target, and
whether group membership is administered at all) and its *restriction flags*
(no negation anywhere, no delete/remove rules, single-rule-with-direct-conjuncts).
The planners consult these classifications to decide applicability.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional

from .model import DirectState, GroupHierarchy, effective_group_attr, effective_groups, effective_user_attr


class PolicyError(ValueError):
    """Contract violation, e.g. a group literal evaluated for a group subject."""


class Relation(enum.Enum):
    ADD_U = "canAddU"
    DELETE_U = "canDeleteU"
    ADD_UG = "canAddUG"
    DELETE_UG = "canDeleteUG"
    ASSIGN = "canAssign"
    REMOVE = "canRemove"

    @property
    def is_membership(self) -> bool:
        return self in (Relation.ASSIGN, Relation.REMOVE)

    @property
    def is_group_subject(self) -> bool:
        """Whether preconditions are evaluated against the target group."""
        return self in (Relation.ADD_UG, Relation.DELETE_UG)

    @property
    def is_delete(self) -> bool:
        return self in (Relation.DELETE_U, Relation.DELETE_UG, Relation.REMOVE)

    @property
    def order(self) -> int:
        return _RELATION_ORDER[self]


_RELATION_ORDER = {rel: i for i, rel in enumerate(Relation)}


# --- Precondition formula AST -------------------------------------------------
#
# Subjects: a value literal refers to the rule's subject (the user for
# canAddU/canDeleteU/canAssign/canRemove, the target group for
# canAddUG/canDeleteUG).  Group membership literals always refer to the user
# and are only legal in assign/remove rules.

@dataclass(frozen=True)
class Precondition:
    def walk(self) -> Iterator["Precondition"]:
        yield self

    def holds(self, state: DirectState, hierarchy: GroupHierarchy, subject: Optional[str]) -> bool:
        """Evaluate against a state; ``subject`` is None for the user, else a group id."""
        raise NotImplementedError


@dataclass(frozen=True)
class TrueCond(Precondition):
    """Always satisfied; lets unconditional rules be written."""

    def holds(self, state, hierarchy, subject):
        return True


@dataclass(frozen=True)
class Not(Precondition):
    child: Precondition

    def walk(self):
        yield self
        yield from self.child.walk()

    def holds(self, state, hierarchy, subject):
        return not self.child.holds(state, hierarchy, subject)


@dataclass(frozen=True)
class And(Precondition):
    left: Precondition
    right: Precondition

    def walk(self):
        yield self
        yield from self.left.walk()
        yield from self.right.walk()

    def holds(self, state, hierarchy, subject):
        return self.left.holds(state, hierarchy, subject) and self.right.holds(
            state, hierarchy, subject
        )


@dataclass(frozen=True)
class DirectVal(Precondition):
    att: str
    val: str

    def holds(self, state, hierarchy, subject):
        if subject is None:
            return self.val in state.user_values(self.att)
        return self.val in state.group_values(subject, self.att)


@dataclass(frozen=True)
class EffVal(Precondition):
    att: str
    val: str

    def holds(self, state, hierarchy, subject):
        if subject is None:
            return self.val in effective_user_attr(state, hierarchy, self.att)
        return self.val in effective_group_attr(state, hierarchy, subject, self.att)


@dataclass(frozen=True)
class DirectGroup(Precondition):
    group: str

    def holds(self, state, hierarchy, subject):
        if subject is not None:
            raise PolicyError("group membership literal evaluated for a group subject")
        return self.group in state.user_groups


@dataclass(frozen=True)
class EffGroup(Precondition):
    group: str

    def holds(self, state, hierarchy, subject):
        if subject is not None:
            raise PolicyError("group membership literal evaluated for a group subject")
        return self.group in effective_groups(state, hierarchy)


def conjunction(parts: list[Precondition]) -> Precondition:
    """N-ary conjunction stored as a right-nested binary tree."""
    if not parts:
        return TrueCond()
    result = parts[-1]
    for part in reversed(parts[:-1]):
        result = And(part, result)
    return result


def conjuncts(pre: Precondition) -> list[Precondition]:
    """Flatten top-level conjunction back into its parts."""
    if isinstance(pre, And):
        return conjuncts(pre.left) + conjuncts(pre.right)
    return [pre]


def direct_conjunct_shape(pre: Precondition) -> Optional[list[tuple[bool, Precondition]]]:
    """Decompose into (positive, literal) pairs if the formula is a conjunction of
    possibly-negated Direct* literals (or True); None if it has any other shape."""
    out: list[tuple[bool, Precondition]] = []
    for part in conjuncts(pre):
        positive = True
        while isinstance(part, Not):
            positive = not positive
            part = part.child
        if isinstance(part, TrueCond):
            if not positive:
                return None
            continue
        if isinstance(part, (DirectVal, DirectGroup)):
            out.append((positive, part))
        else:
            return None
    return out


# --- Rules -------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    relation: Relation
    role: str
    pre: Precondition
    target_attr: Optional[str] = None   # value relations only
    target_val: Optional[str] = None    # value relations only
    target_group: Optional[str] = None  # assign/remove only
    rule_id: int = 0

    def __post_init__(self):
        if self.relation.is_membership:
            if self.target_group is None or self.target_attr is not None or self.target_val is not None:
                raise PolicyError(f"{self.relation.value} rule must target a group only")
        else:
            if self.target_attr is None or self.target_val is None or self.target_group is not None:
                raise PolicyError(f"{self.relation.value} rule must target an (attribute, value)")


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        for i, rule in enumerate(self.rules):
            if rule.rule_id != i:
                raise PolicyError(f"rule ids must be dense declaration order; got {rule.rule_id} at {i}")

    @classmethod
    def build(cls, rules) -> "RuleSet":
        """Assign dense ids in declaration order."""
        numbered = []
        for i, rule in enumerate(rules):
            numbered.append(
                Rule(rule.relation, rule.role, rule.pre, rule.target_attr,
                     rule.target_val, rule.target_group, rule_id=i)
            )
        return cls(tuple(numbered))

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def by_relation(self, relation: Relation) -> list[Rule]:
        return [r for r in self.rules if r.relation == relation]


def eval_precondition(
    pre: Precondition,
    state: DirectState,
    hierarchy: GroupHierarchy,
    subject: Optional[str] = None,
) -> bool:
    """Standard boolean semantics; ``subject`` None means the user."""
    return pre.holds(state, hierarchy, subject)


class Level(enum.Enum):
    G0 = "G0"
    G1 = "G1"
    G1PLUS = "G1plus"


@dataclass(frozen=True)
class RestrictionFlags:
    no_negation: bool
    no_deletion: bool
    single_rule_direct: bool
    level: Level


def classify_level(rules: RuleSet) -> Level:
    """G1plus if membership is administered or group literals appear; G1 if a
    value rule's precondition mentions a foreign attribute; G0 otherwise."""
    cross_attribute = False
    for rule in rules:
        if rule.relation.is_membership:
            return Level.G1PLUS
        for node in rule.pre.walk():
            if isinstance(node, (DirectGroup, EffGroup)):
                return Level.G1PLUS
            if isinstance(node, (DirectVal, EffVal)) and node.att != rule.target_attr:
                cross_attribute = True
    return Level.G1 if cross_attribute else Level.G0


def check_restrictions(rules: RuleSet) -> RestrictionFlags:
    no_negation = not any(
        isinstance(node, Not) for rule in rules for node in rule.pre.walk()
    )
    no_deletion = not any(rule.relation.is_delete for rule in rules)

    # Single rule with direct conjuncts: every precondition is a conjunction of
    # possibly-negated direct literals (negated direct literals are fine; only
    # effective literals break the shape), and each value assignment or group
    # has at most one add/assign rule.
    single = True
    seen_pairs: set[tuple[str, str]] = set()
    seen_assign: set[str] = set()
    for rule in rules:
        if direct_conjunct_shape(rule.pre) is None:
            single = False
            break
        if rule.relation in (Relation.ADD_U, Relation.ADD_UG):
            # one rule per (att, val) across both add relations: a value pair
            # is addable through the user or through groups, never both
            key = (rule.target_attr, rule.target_val)
            if key in seen_pairs:
                single = False
                break
            seen_pairs.add(key)
        elif rule.relation == Relation.ASSIGN:
            if rule.target_group in seen_assign:
                single = False
                break
            seen_assign.add(rule.target_group)
    return RestrictionFlags(no_negation, no_deletion, single, classify_level(rules))
