import pathlib

import pytest
from hypothesis import given, settings, strategies as st

from gurag_reach.dsl import parse, render_precondition, serialize
from gurag_reach.fuzz import generate
from gurag_reach.policy import (
    DirectGroup,
    DirectVal,
    EffGroup,
    EffVal,
    Not,
    TrueCond,
    conjunction,
)

from conftest import GOLDEN, MALFORMED


class TestGoldenRoundTrip:
    @pytest.mark.parametrize("path", sorted(GOLDEN.glob("*.gurag")),
                             ids=lambda p: p.name)
    def test_parse_serialize_identity(self, path):
        text = path.read_text()
        result = parse(text)
        assert result.ok, [d.render() for d in result.diagnostics]
        assert serialize(result.instance, result.queries, result.plans) == text

    def test_golden_corpus_nonempty(self):
        assert len(list(GOLDEN.glob("*.gurag"))) >= 5


class TestMalformedCorpus:
    paths = sorted(MALFORMED.glob("*.gurag"))

    def test_corpus_has_fifty_files(self):
        assert len(self.paths) == 50

    @pytest.mark.parametrize("path", paths, ids=lambda p: p.name)
    def test_positioned_diagnostics_no_abort(self, path):
        result = parse(path.read_text())  # must not raise
        errors = [d for d in result.diagnostics if d.severity == "error"]
        assert errors, "malformed file produced no error diagnostic"
        for d in errors:
            assert d.line >= 1 and d.column >= 1
            assert d.code and d.message

    def test_recovery_continues_past_first_error(self):
        # two independent errors on separate lines: both must be reported
        result = parse("attr a scope { $ }\nattr b scope { $$ }\n")
        lines = {d.line for d in result.diagnostics if d.severity == "error"}
        assert {1, 2} <= lines


class TestParserDetails:
    def test_comments_and_blank_lines_ignored(self):
        result = parse("# leading comment\n\nattr a scope { x }  # trailing\nrole r\n")
        assert result.ok
        assert result.instance.scopes == {"a": frozenset({"x"})}

    def test_numeric_looking_tokens_are_identifiers(self):
        result = parse("attr roomAcc scope { 1.02, 2.01 }\nrole r\n")
        assert result.ok
        assert result.instance.scopes["roomAcc"] == {"1.02", "2.01"}

    def test_nary_and_is_right_nested(self):
        text = ("attr a scope { x, y, z }\nrole r\n"
                "rules {\n  rule canAddU a : r , x in direct(a) and "
                "y in direct(a) and z in effective(a) -> x\n}\n")
        result = parse(text)
        assert result.ok
        pre = result.instance.rules.rules[0].pre
        assert pre == conjunction([DirectVal("a", "x"), DirectVal("a", "y"),
                                   EffVal("a", "z")])

    def test_not_and_parentheses(self):
        text = ("attr a scope { x }\nrole r\n"
                "rules {\n  rule canAddU a : r , not(x in direct(a)) -> x\n}\n")
        result = parse(text)
        assert result.ok
        assert result.instance.rules.rules[0].pre == Not(DirectVal("a", "x"))

    def test_membership_literals_in_assign(self):
        text = ("attr a scope { x }\ngroup G1\ngroup G2\nrole r\n"
                "rules {\n  rule canAssign : r , G1 in directUg and "
                "not(G2 in effUg) -> G2\n}\n")
        result = parse(text)
        assert result.ok
        pre = result.instance.rules.rules[0].pre
        assert pre == conjunction([DirectGroup("G1"), Not(EffGroup("G2"))])

    def test_multiple_queries_and_plans(self):
        text = ("attr a scope { x }\nrole r\n"
                "query strict { e_a(u) = { x } }\n"
                "query relaxed { e_a(u) = { } }\n"
                "plan { addU(r, a, x) }\nplan { }\n")
        result = parse(text)
        assert result.ok
        assert len(result.queries) == 2 and len(result.plans) == 2
        assert result.queries[0].strict and not result.queries[1].strict
        assert len(result.plans[0]) == 1 and len(result.plans[1]) == 0

    def test_diagnostic_position_is_exact(self):
        result = parse("attr a scope { x }\nrole r\nuser { a = { zz } }\n")
        (d,) = [d for d in result.diagnostics if d.severity == "error"]
        assert (d.line, d.column) == (3, 14)
        assert d.code == "scope-violation"


def test_render_precondition_true():
    assert render_precondition(TrueCond()) == "true"
    assert render_precondition(Not(TrueCond())) == "not(true)"


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["nonneg", "srd", "any"]), st.integers(0, 10_000))
def test_generated_instances_roundtrip(cls, seed):
    """Serializer output re-parses to an equal document, byte-exactly."""
    instance, q = generate(cls, seed)
    text = serialize(instance, [q])
    result = parse(text)
    assert result.ok, [d.render() for d in result.diagnostics]
    assert serialize(result.instance, result.queries, result.plans) == text
    assert result.instance.scopes == instance.scopes
    assert result.instance.rules == instance.rules
    assert result.instance.initial_state == instance.initial_state
    assert result.queries == [q]
