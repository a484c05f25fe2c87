"""Oracle, state/tape codec and the compiled machine."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xdlvm.chemputer import LiquidSample, standard_platform
from xdlvm.colour import ColourClass
from xdlvm.conditions import evaluate
from xdlvm.errors import ConfigError
from xdlvm.parser import parse_document
from xdlvm.runtime import ExecutionConfig, run
from xdlvm.turing import (
    HALTED,
    EncodingOverflow,
    HeadAmbiguous,
    NoRule,
    Rule,
    TapeBounds,
    TmConfiguration,
    TmSpec,
    UnknownColour,
    adder_tape,
    compile_tm,
    decode_snapshot,
    decode_state,
    decode_tape,
    encode_state,
    initial_configuration,
    iteration_snapshots,
    leaf_steps_per_transition,
    load_configuration,
    oracle_run,
    oracle_step,
    oracle_trace,
    parse_tape,
    random_binary_machine,
    render_compiled,
    run_compiled,
)
from xdlvm.turing.compiler import rule_condition

W, O, B, G = ColourClass.WHITE, ColourClass.ORANGE, ColourClass.BLUE, ColourClass.GREEN
BINARY = (("0", W), ("1", O))


def machine(rules, states=("A",), alphabet=BINARY, **kw):
    return TmSpec(states=states, alphabet=alphabet, blank="0", rules=rules,
                  initial_state=kw.pop("initial_state", "A"), **kw)


# -- oracle -------------------------------------------------------------------


def test_step_writes_moves_and_switches():
    spec = machine({("A", "0"): Rule("1", "R", "B"), ("B", "0"): Rule("0", "L", "A")},
                   states=("A", "B"))
    c = oracle_step(spec, TmConfiguration(("0", "0", "0"), 2, "A"))
    assert c == TmConfiguration(("0", "1", "0"), 3, "B")


def test_step_in_halt_state():
    spec = machine({})
    assert oracle_step(spec, TmConfiguration(("0",), 1, "HALT")) is HALTED


def test_step_off_the_left_edge():
    spec = machine({("A", "0"): Rule("0", "L", "A")})
    with pytest.raises(TapeBounds):
        oracle_step(spec, TmConfiguration(("0", "0"), 1, "A"))


def test_missing_rule():
    spec = machine({("A", "0"): Rule("1", "R", "A")})
    with pytest.raises(NoRule) as info:
        oracle_run(spec, TmConfiguration(("0", "1"), 1, "A"), 10)
    assert (info.value.state, info.value.symbol) == ("A", "1")


def test_busy_beaver_oracle(busy_beaver):
    c0 = initial_configuration(busy_beaver, "00000000")
    assert c0.head == 3
    final, transitions, halted = oracle_run(busy_beaver, c0, 100)
    assert halted and transitions == 14
    assert final.tape_string() == "01111110"
    assert final.state == "HALT"


def test_busy_beaver_matches_the_published_snapshot(busy_beaver):
    # Three rows above the final one: head on the third vial from the right,
    # state C, tape 01111010.
    run_ = oracle_trace(busy_beaver, initial_configuration(busy_beaver, "00000000"), 100)
    c = run_.configurations[-4]
    assert (c.tape_string(), c.head, c.state) == ("01111010", 6, "C")


def test_adder_oracle_on_worked_example(adder):
    c0 = initial_configuration(adder, "101x0011")
    assert (c0.head, c0.state) == (8, "F")
    final, transitions, halted = oracle_run(adder, c0, 1000)
    assert halted
    assert final.tape_string() == "00001000"


@pytest.mark.parametrize("a", range(8))
@pytest.mark.parametrize("b", range(8))
def test_adder_oracle_adds(adder, a, b):
    c0 = initial_configuration(adder, adder_tape(a, b))
    result = oracle_trace(adder, c0, 2000)
    if (a, b) == (0, 0):
        # nothing to add: the fetch scan runs off the right end of the tape
        assert result.outcome == "tape_bounds"
        assert result.final.tape_string() == "00000000"
        return
    assert result.outcome == "halt"
    assert int(result.final.tape_string(), 2) == a + b


def test_initial_halt_state_takes_no_transitions():
    spec = machine({}, initial_state="HALT")
    final, transitions, halted = oracle_run(spec, TmConfiguration(("0",), 1, "HALT"), 10)
    assert (transitions, halted) == (0, True)


def test_unbounded_oracle_grows_the_tape():
    spec = machine({("A", "0"): Rule("0", "R", "A")})
    final, transitions, halted = oracle_run(spec, TmConfiguration(("0",) * 4, 1, "A"), 20,
                                            unbounded=True)
    assert (transitions, halted) == (20, False)
    assert len(final.tape) == 21


def test_spec_validation():
    with pytest.raises(ConfigError):
        machine({("A", "0"): Rule("2", "R", "A")})
    with pytest.raises(ConfigError):
        machine({("A", "0"): Rule("0", "R", "Z")})
    with pytest.raises(ConfigError):
        machine({}, alphabet=(("0", O), ("1", W)))
    with pytest.raises(ConfigError):
        machine({}, alphabet=(("0", W), ("1", W)))


def test_spec_dict_round_trip(adder, busy_beaver):
    for spec in (adder, busy_beaver):
        assert TmSpec.from_dict(spec.to_dict()) == spec


def test_parse_tape():
    spec = machine({})
    assert parse_tape(spec, "101", 5) == ("1", "0", "1", "0", "0")
    with pytest.raises(ValueError):
        parse_tape(spec, "1012")
    with pytest.raises(ValueError):
        parse_tape(spec, "101", 2)


# -- codec --------------------------------------------------------------------


def test_state_encoding(adder):
    assert encode_state("F", adder) == (W, W)
    assert encode_state("M", adder) == (W, O)
    assert encode_state("HALT", adder) == (G, G)
    pairs = {encode_state(s, adder) for s in adder.states + ("HALT",)}
    assert len(pairs) == len(adder.states) + 1
    for s in adder.states:
        assert decode_state(encode_state(s, adder), adder) == s


def test_sixteenth_state_overflows():
    states = tuple(f"S{i}" for i in range(16))
    spec = TmSpec(states, BINARY, "0", {}, "S0")
    assert encode_state("S14", spec) == (G, B)
    with pytest.raises(EncodingOverflow):
        encode_state("S15", spec)


def test_twenty_states_do_not_compile():
    states = tuple(f"S{i}" for i in range(20))
    with pytest.raises(EncodingOverflow):
        compile_tm(TmSpec(states, BINARY, "0", {}, "S0"), 8)


def test_adder_tape_loads_as_colours(adder):
    p = load_configuration(standard_platform(8, 8), adder, initial_configuration(adder, "101x0011"))
    tape = [p.true_colour(v.id) for v in p.by_role("tape")]
    assert tape == [O, W, O, B, W, W, O, O]
    assert [v.volume_ml for v in p.by_role("head")] == [0] * 7 + [5]


def test_blank_tape_loads_empty(busy_beaver):
    p = load_configuration(standard_platform(8, 8), busy_beaver,
                           initial_configuration(busy_beaver, "00000000"))
    assert all(v.volume_ul == 0 for v in p.by_role("tape"))
    assert decode_tape(p, busy_beaver) == initial_configuration(busy_beaver, "00000000")


def test_tape_longer_than_platform(adder):
    with pytest.raises(ValueError):
        load_configuration(standard_platform(8, 8), adder,
                           TmConfiguration(tuple("101x00110"), 1, "F"))


def test_two_filled_heads_are_ambiguous(busy_beaver):
    p = load_configuration(standard_platform(8, 8), busy_beaver,
                           initial_configuration(busy_beaver, "00000000"))
    p.transfer("stock_orange", "head_5", 5)
    with pytest.raises(HeadAmbiguous):
        decode_tape(p, busy_beaver)


def test_colour_outside_alphabet(busy_beaver):
    p = load_configuration(standard_platform(8, 8), busy_beaver,
                           initial_configuration(busy_beaver, "00000000"))
    p.set_contents("tape_1", [LiquidSample.of_ml("blue", 5, (0, 0, 255))])
    with pytest.raises(UnknownColour):
        decode_tape(p, busy_beaver)


configs = st.builds(
    lambda tape, head, state: TmConfiguration(tuple(tape), head, state),
    st.lists(st.sampled_from("01xy"), min_size=8, max_size=8),
    st.integers(1, 8),
    st.sampled_from(list("FMNOEDCBAP") + ["HALT"]),
)


@given(configs)
@settings(max_examples=100, deadline=None)
def test_codec_round_trip(adder, c):
    p = load_configuration(standard_platform(8, 8), adder, c)
    assert decode_tape(p, adder) == c
    assert decode_snapshot(p.snapshot(), adder) == c


# -- compiler -----------------------------------------------------------------


def test_compiled_document_calls_turing_machine(busy_beaver):
    doc = compile_tm(busy_beaver, 8)
    assert [s.name for s in doc.main_steps] == ["TuringMachine"]
    assert {"TuringMachine", "Transition", "ReadState", "ReadTape", "LookUpTable"} <= {
        b.id for b in doc.blueprints}


def test_compiled_text_parses_back(busy_beaver, adder):
    for spec in (busy_beaver, adder):
        assert parse_document(render_compiled(spec, 8)) == compile_tm(spec, 8)


def test_one_rule_machine_runs_one_transition():
    spec = machine({("A", "0"): Rule("0", "R", "HALT")})
    result = run_compiled(spec, TmConfiguration(("0",) * 4, 1, "A"))
    assert result.outcome == "halt"
    assert result.transitions == 1
    assert result.configurations[-1] == TmConfiguration(("0",) * 4, 2, "HALT")


def test_no_rule_sets_error_flag():
    spec = machine({("A", "0"): Rule("1", "R", "A")})
    result = run_compiled(spec, TmConfiguration(("0", "0", "1", "0"), 1, "A"))
    assert result.outcome == "error"
    assert result.configurations[-1] == TmConfiguration(("1", "1", "1", "0"), 3, "A")


def test_compiled_busy_beaver(busy_beaver):
    c0 = initial_configuration(busy_beaver, "00000000")
    result = run_compiled(busy_beaver, c0)
    assert result.outcome == "halt"
    assert result.configurations == oracle_trace(busy_beaver, c0, 100).configurations
    final = decode_tape(result.platform, busy_beaver)
    assert final.tape_string() == "01111110" and final.state == "HALT"


def test_step_budget_bound_holds(busy_beaver):
    c0 = initial_configuration(busy_beaver, "00000000")
    result = run_compiled(busy_beaver, c0)
    per = leaf_steps_per_transition(busy_beaver, 8)
    starts = [i for i, e in enumerate(result.trace) if e.step_name == "ResetVariables"]
    for a, b in zip(starts, starts[1:] + [len(result.trace)]):
        leaves = [e for e in result.trace[a:b] if e.executed and e.step_name in (
            "Transfer", "Measure", "ResetVariables", "Wait")]
        assert len(leaves) <= per


def _rule_conditions(spec, n):
    return [rule_condition(spec, s, sym, n) for s, sym, _ in spec.ordered_rules()]


@pytest.mark.parametrize("seed", range(12))
def test_exactly_one_rule_fires_per_iteration(seed):
    spec, c0 = random_binary_machine(seed)
    result = run_compiled(spec, c0, 40)
    conds = _rule_conditions(spec, len(c0.tape))
    store = {}
    iterations = []
    for e in result.trace:
        if e.step_name == "ResetVariables" and e.executed:
            if store:
                iterations.append(dict(store))
            store = {}
        for k, v in e.store_delta.items():
            if v is not None:
                store[k] = v
    iterations.append(store)
    for bindings, config in zip(iterations, result.configurations):
        fired = sum(evaluate(c, bindings) for c in conds)
        if config.state == "HALT":
            assert fired == 0
        elif result.outcome != "error" or config != result.configurations[-1]:
            assert fired == 1


@pytest.mark.parametrize("seed", range(20))
def test_random_machines_match_oracle(seed):
    spec, c0 = random_binary_machine(seed)
    compiled = run_compiled(spec, c0, 100)
    oracle = oracle_trace(spec, c0, 100)
    assert compiled.configurations == oracle.configurations
    expected = {"halt": "halt", "no_rule": "error", "tape_bounds": "error", "cap": "cap"}
    assert compiled.outcome == expected[oracle.outcome]


def test_camera_noise_does_not_change_the_run(busy_beaver):
    c0 = initial_configuration(busy_beaver, "00000000")
    noisy = run_compiled(busy_beaver, c0, sigma=15, seed=11)
    assert noisy.configurations == run_compiled(busy_beaver, c0).configurations


def test_iteration_snapshots_follow_reset_events(busy_beaver):
    doc = compile_tm(busy_beaver, 8)
    p = load_configuration(standard_platform(8, 8), busy_beaver,
                           initial_configuration(busy_beaver, "00000000"))
    _, trace = run(doc, p, ExecutionConfig(max_steps=100_000))
    assert len(iteration_snapshots(trace)) == 15
