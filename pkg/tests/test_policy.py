import pytest

from gurag_reach.model import DirectState, GroupHierarchy
from gurag_reach.policy import (
    And,
    DirectGroup,
    DirectVal,
    EffGroup,
    EffVal,
    Level,
    Not,
    PolicyError,
    Relation,
    Rule,
    RuleSet,
    TrueCond,
    check_restrictions,
    classify_level,
    conjunction,
    conjuncts,
    direct_conjunct_shape,
    eval_precondition,
)

H = GroupHierarchy(frozenset({"G1", "G2"}), frozenset({("G1", "G2")}))


def rule(relation, pre, **kw):
    return Rule(relation, "r", pre, **kw)


class TestPreconditionSemantics:
    state = DirectState(
        user_attrs={"a": {"x"}},
        group_attrs={"G1": {"a": {"g"}}, "G2": {"a": {"j"}}},
        user_groups={"G1"},
    )

    def test_direct_vs_effective_for_user(self):
        assert eval_precondition(DirectVal("a", "x"), self.state, H)
        assert not eval_precondition(DirectVal("a", "g"), self.state, H)
        assert eval_precondition(EffVal("a", "g"), self.state, H)
        assert eval_precondition(EffVal("a", "j"), self.state, H)

    def test_group_subject_uses_group_segment(self):
        assert eval_precondition(DirectVal("a", "g"), self.state, H, subject="G1")
        assert not eval_precondition(DirectVal("a", "j"), self.state, H, subject="G1")
        # effective for a group includes its juniors
        assert eval_precondition(EffVal("a", "j"), self.state, H, subject="G1")

    def test_membership_literals(self):
        assert eval_precondition(DirectGroup("G1"), self.state, H)
        assert not eval_precondition(DirectGroup("G2"), self.state, H)
        assert eval_precondition(EffGroup("G2"), self.state, H)

    def test_membership_literal_rejected_for_group_subject(self):
        with pytest.raises(PolicyError):
            eval_precondition(DirectGroup("G1"), self.state, H, subject="G2")

    def test_boolean_connectives(self):
        pre = And(DirectVal("a", "x"), Not(DirectVal("a", "g")))
        assert eval_precondition(pre, self.state, H)
        assert eval_precondition(TrueCond(), DirectState(), H)


def test_conjunction_roundtrip():
    parts = [DirectVal("a", "x"), Not(DirectVal("a", "y")), TrueCond()]
    assert conjuncts(conjunction(parts)) == parts
    assert conjunction([]) == TrueCond()
    assert conjunction([parts[0]]) == parts[0]


def test_direct_conjunct_shape():
    ok = conjunction([DirectVal("a", "x"), Not(DirectGroup("G1"))])
    shape = direct_conjunct_shape(ok)
    assert shape == [(True, DirectVal("a", "x")), (False, DirectGroup("G1"))]
    # effective literals break the shape
    assert direct_conjunct_shape(EffVal("a", "x")) is None
    # negated True breaks it too
    assert direct_conjunct_shape(Not(TrueCond())) is None
    assert direct_conjunct_shape(TrueCond()) == []


class TestRuleShape:
    def test_value_rule_requires_attr_and_val(self):
        with pytest.raises(PolicyError):
            rule(Relation.ADD_U, TrueCond(), target_group="G1")
        with pytest.raises(PolicyError):
            rule(Relation.ADD_U, TrueCond(), target_attr="a")

    def test_membership_rule_requires_group_only(self):
        with pytest.raises(PolicyError):
            rule(Relation.ASSIGN, TrueCond(), target_attr="a", target_val="x")

    def test_ruleset_ids_are_dense(self):
        rs = RuleSet.build([
            rule(Relation.ADD_U, TrueCond(), target_attr="a", target_val="x"),
            rule(Relation.ASSIGN, TrueCond(), target_group="G1"),
        ])
        assert [r.rule_id for r in rs] == [0, 1]
        with pytest.raises(PolicyError):
            RuleSet((rs.rules[1],))  # id 1 at position 0


class TestClassification:
    def test_level_g0(self):
        rs = RuleSet.build([
            rule(Relation.ADD_U, DirectVal("a", "x"), target_attr="a", target_val="y"),
        ])
        assert classify_level(rs) == Level.G0

    def test_level_g1_cross_attribute(self):
        rs = RuleSet.build([
            rule(Relation.ADD_U, DirectVal("b", "x"), target_attr="a", target_val="y"),
        ])
        assert classify_level(rs) == Level.G1

    def test_level_g1plus_membership(self):
        rs = RuleSet.build([rule(Relation.ASSIGN, TrueCond(), target_group="G1")])
        assert classify_level(rs) == Level.G1PLUS
        assert Level.G1PLUS.value == "G1plus"

    def test_restriction_flags(self):
        rs = RuleSet.build([
            rule(Relation.ADD_U, Not(DirectVal("a", "x")), target_attr="a", target_val="y"),
            rule(Relation.DELETE_U, TrueCond(), target_attr="a", target_val="y"),
        ])
        flags = check_restrictions(rs)
        assert not flags.no_negation
        assert not flags.no_deletion
        assert flags.single_rule_direct  # negated direct literals keep the shape

    def test_single_rule_violated_across_add_relations(self):
        # one pair addable both directly and through groups breaks the
        # single-rule restriction even though the relations differ
        rs = RuleSet.build([
            rule(Relation.ADD_U, TrueCond(), target_attr="a", target_val="x"),
            rule(Relation.ADD_UG, TrueCond(), target_attr="a", target_val="x"),
        ])
        assert not check_restrictions(rs).single_rule_direct

    def test_single_rule_violated_by_duplicate_assign(self):
        rs = RuleSet.build([
            rule(Relation.ASSIGN, TrueCond(), target_group="G1"),
            rule(Relation.ASSIGN, DirectGroup("G2"), target_group="G1"),
        ])
        assert not check_restrictions(rs).single_rule_direct

    def test_single_rule_violated_by_effective_literal(self):
        rs = RuleSet.build([
            rule(Relation.ADD_U, EffVal("a", "x"), target_attr="a", target_val="y"),
        ])
        assert not check_restrictions(rs).single_rule_direct
