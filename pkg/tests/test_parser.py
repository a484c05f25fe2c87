"""Parser, condition grammar and canonical printer."""

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from xdlvm.document import KEYWORDS, And, Blueprint, Literal, Not, Or, Step, Var, XdlDocument, normalize
from xdlvm.errors import XdlError, XdlSyntaxError
from xdlvm.parser import MAX_DEPTH, parse_condition, parse_document, print_condition, print_document


def messages(text):
    with pytest.raises(XdlSyntaxError) as info:
        parse_document(text)
    return [d.message for d in info.value.diagnostics]


# -- documents ----------------------------------------------------------------


def test_measure_step_keeps_its_five_attributes():
    doc = parse_document('<Measure step_id="C" target="reactor_1" quantity="colour" '
                         'comparison_value="red" true_if="equal"/>')
    (step,) = doc.main_steps
    assert step.name == "Measure"
    assert step.attrs == {"step_id": "C", "target": "reactor_1", "quantity": "colour",
                          "comparison_value": "red", "true_if": "equal"}
    assert step.condition is None


def test_condition_attribute_is_parsed_into_a_tree():
    (step,) = parse_document('<S1 p="v" condition="not C" />').main_steps
    assert step.name == "S1"
    assert step.attrs == {"p": "v"}
    assert step.condition == Not(Var("C"))


def test_children_only_allowed_on_repeat():
    assert "children only allowed on Repeat" in messages("<A><B/></A>")


def test_repeat_may_nest_children():
    (rep,) = parse_document('<Repeat times="2"><Wait time="1"/><Wait time="2"/></Repeat>').main_steps
    assert [c.attrs["time"] for c in rep.children] == ["1", "2"]


def test_blueprint_with_params_and_defaults():
    doc = parse_document('<Blueprint id="Q" params="vessel, volume=2"><Wait time="1"/></Blueprint>'
                         '<Q vessel="r"/>')
    bp = doc.blueprint("Q")
    assert [(p.name, p.default) for p in bp.params] == [("vessel", None), ("volume", "2")]
    assert doc.main_steps[0].name == "Q"


def test_monitor_is_an_alias_for_measure():
    (step,) = parse_document('<Monitor step_id="C" target="r" quantity="colour" '
                             'comparison_value="blue" true_if="equal"/>').main_steps
    assert step.name == "Measure"


def test_entities_and_comments():
    doc = parse_document('<!-- hi --><Wait note="a &amp; b &lt;c&gt; &quot;q&quot;"/>')
    assert doc.main_steps[0].attrs["note"] == 'a & b <c> "q"'


@pytest.mark.parametrize("text, fragment", [
    ("<A>", "never closed"),
    ("<A></B>", "expected </A>"),
    ('<A x=1/>', "quoted"),
    ('<A x="1" x="2"/>', "duplicate attribute"),
    ("<A>text</A>", "text"),
    ('<A x="&nbsp;"/>', "entity"),
    ('<ns:A/>', "namespaces"),
    ('<A condition="C and"/>', "malformed condition"),
    ('<Repeat while_condition="(a"/>', "malformed condition"),
    ('<Blueprint id="X"/><Blueprint id="X"/>', "duplicate blueprint id"),
    ('<Blueprint params="a"/>', "non-empty id"),
])
def test_malformed_documents_are_rejected(text, fragment):
    found = messages(text)
    assert found
    assert any(fragment.lower() in m.lower() for m in found), found


def test_diagnostics_carry_positions():
    with pytest.raises(XdlSyntaxError) as info:
        parse_document('<Wait/>\n<Wait condition="A and and B"/>')
    d = info.value.diagnostics[0]
    assert d.line == 2
    assert d.column > 1
    assert d.format("x.xdl").startswith("x.xdl:2:")


def test_nesting_depth_is_capped():
    ok = "<Repeat times=\"1\">" * (MAX_DEPTH - 1) + "<Wait/>" + "</Repeat>" * (MAX_DEPTH - 1)
    parse_document(ok)
    deep = "<Repeat times=\"1\">" * (MAX_DEPTH + 1) + "</Repeat>" * (MAX_DEPTH + 1)
    assert any("depth" in m for m in messages(deep))


def test_bytes_input_and_bom():
    doc = parse_document("﻿<Wait/>".encode("utf-8"))
    assert doc.main_steps[0].name == "Wait"
    assert any("UTF-8" in m for m in messages(b"<Wait note=\"\xff\"/>"))


# -- conditions ---------------------------------------------------------------


def test_single_variable():
    assert parse_condition("C") == Var("C")


def test_not_halt():
    assert parse_condition("not HALT") == Not(Var("HALT"))


def test_precedence_not_and_or():
    assert parse_condition("A and not B or C") == Or(And(Var("A"), Not(Var("B"))), Var("C"))


def test_keywords_case_insensitive_identifiers_case_sensitive():
    assert parse_condition("NOT a AND B") == And(Not(Var("a")), Var("B"))
    assert parse_condition("a") != parse_condition("A")
    assert parse_condition("TRUE or False") == Or(Literal(True), Literal(False))


def test_binary_operators_associate_left():
    assert parse_condition("a or b or c") == Or(Or(Var("a"), Var("b")), Var("c"))
    assert parse_condition("a and (b and c)") == And(Var("a"), And(Var("b"), Var("c")))


@pytest.mark.parametrize("text", ["", "and", "a b", "(a", "a)", "not", "a or", "1abc", "a && b"])
def test_malformed_conditions(text):
    with pytest.raises(XdlSyntaxError):
        parse_condition(text)


def test_printer_uses_minimal_parentheses():
    e = And(Or(Var("a"), Var("b")), Not(And(Var("c"), Var("d"))))
    assert print_condition(e) == "(a or b) and not (c and d)"
    assert print_condition(Or(Var("a"), Or(Var("b"), Var("c")))) == "a or (b or c)"


names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True).filter(
    lambda s: s.lower() not in KEYWORDS)


def trees(max_depth):
    leaves = st.one_of(names.map(Var), st.booleans().map(Literal))
    if max_depth == 0:
        return leaves
    sub = trees(max_depth - 1)
    return st.one_of(
        leaves,
        sub.map(Not),
        st.tuples(sub, sub).map(lambda t: And(*t)),
        st.tuples(sub, sub).map(lambda t: Or(*t)),
    )


@given(trees(8))
@settings(max_examples=300, deadline=None)
def test_condition_round_trip(expr):
    assert parse_condition(print_condition(expr)) == expr


# -- document round trip ------------------------------------------------------

attr_values = st.text(st.characters(blacklist_categories=("Cs", "Cc")), max_size=12)
attr_keys = st.from_regex(r"[a-z][a-z_]{0,7}", fullmatch=True).filter(
    lambda k: k not in ("condition", "while_condition"))
step_names = st.sampled_from(["Transfer", "Wait", "Measure", "Stir", "Heat", "Add", "Custom"])


def steps(depth):
    leaf = st.builds(
        lambda n, a, c: Step(n, a, c),
        step_names,
        st.dictionaries(attr_keys, attr_values, max_size=3).map(lambda d: tuple(d.items())),
        st.one_of(st.none(), trees(3)),
    )
    if depth == 0:
        return leaf
    repeat = st.builds(
        lambda t, kids, c: Step("Repeat", (("times", str(t)),), c, tuple(kids)),
        st.integers(1, 5), st.lists(steps(depth - 1), min_size=1, max_size=3),
        st.one_of(st.none(), trees(2)),
    )
    return st.one_of(leaf, repeat)


documents = st.builds(
    lambda bps, main: XdlDocument(tuple(Blueprint(f"B{i}", (), tuple(s)) for i, s in enumerate(bps)),
                                  tuple(main)),
    st.lists(st.lists(steps(1), max_size=3), max_size=2),
    st.lists(steps(2), max_size=4),
)


@given(documents)
@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_document_round_trip(doc):
    once = parse_document(print_document(doc))
    assert once == doc
    assert parse_document(print_document(once)) == once


def test_round_trip_of_bundled_fixture(quench_doc):
    assert parse_document(print_document(quench_doc)) == quench_doc


@given(documents)
@settings(max_examples=50, deadline=None)
def test_normalize_is_idempotent(doc):
    assert normalize(normalize(doc)) == normalize(doc)


# -- fuzz ---------------------------------------------------------------------

xmlish = st.text(alphabet='<>/="! -abcAR&;\n\tx', max_size=200)


@given(st.one_of(st.binary(max_size=400), xmlish))
@settings(max_examples=400, deadline=None)
def test_parser_never_crashes(data):
    try:
        parse_document(data)
    except XdlError:
        pass


def test_parser_survives_one_mebibyte():
    blob = (b"<Wait " + b"a" * 1000 + b'="x"/>') * 1000
    try:
        parse_document(blob[: 1 << 20])
    except XdlError:
        pass
    big = "<Repeat times=\"1\">" * 20000
    with pytest.raises(XdlSyntaxError):
        parse_document(big)
