"""Lowering of a Turing machine into a conditional XDL document.

Blueprint layout::

    TuringMachine   Transition, then Repeat(while not HALT and not ERROR) Transition
    Transition      ResetVariables, ReadState, ReadTape, LookUpTable
    ReadState       Measure each state vial against each colour  -> S<j>_<colour>
    ReadTape        Measure each head vial for orange            -> H_<i>
                    Measure each tape vial for each symbol colour -> T_<i>_<colour>
    LookUpTable     per rule: Write<Colour>, Move<Dir>, SwitchToState<Name>,
                    each guarded by the rule condition

There is no assignment step, so HALT, ERROR and the per-rule conditions
are expanded inline from the Measure-bound variables. All guards use the
bindings taken at the top of the iteration, so a vial filled during the
iteration cannot retrigger a later step of the same iteration.

The first Transition runs before the loop so the loop condition always
sees bound variables. A halting run therefore ends with one extra
Transition that only reads the HALT state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..chemputer import FILL_ML, Platform, standard_platform
from ..colour import SYMBOL_COLOURS, ColourClass
from ..document import (
    And,
    Blueprint,
    ConditionExpr,
    Not,
    Step,
    Var,
    XdlDocument,
    all_of,
    any_of,
)
from ..errors import NonTermination
from ..parser import print_condition, print_document
from ..runtime import ExecutionConfig, TraceEvent, run
from .codec import (
    HALT_PAIR,
    MAX_STATES,
    MAX_SYMBOLS,
    EncodingOverflow,
    decode_snapshot,
    encode_state,
    load_configuration,
)
from .machine import TmConfiguration, TmSpec

STATE_VIALS = 2


class CompileError(ValueError):
    pass


def _s(j: int, colour: ColourClass) -> Var:
    return Var(f"S{j}_{colour.value}")


def _h(i: int) -> Var:
    return Var(f"H_{i}")


def _t(i: int, colour: ColourClass) -> Var:
    return Var(f"T_{i}_{colour.value}")


def _measure(step_id: str, target: str, colour: ColourClass) -> Step:
    return Step("Measure", (("step_id", step_id), ("target", target), ("quantity", "colour"),
                            ("comparison_value", colour.value), ("true_if", "equal")))


def _transfer(src: str, dst: str, volume, condition: Optional[ConditionExpr] = None) -> Step:
    return Step("Transfer", (("from", src), ("to", dst), ("volume", str(volume))), condition)


def state_is(pair) -> ConditionExpr:
    return And(_s(1, pair[0]), _s(2, pair[1]))


def read_is(colour: ColourClass, tape_len: int) -> ConditionExpr:
    return any_of(*(And(_h(i), _t(i, colour)) for i in range(1, tape_len + 1)))


def halt_condition() -> ConditionExpr:
    return state_is(HALT_PAIR)


def rule_condition(spec: TmSpec, state: str, symbol: str, tape_len: int) -> ConditionExpr:
    return And(state_is(encode_state(state, spec)), read_is(spec.colour_of(symbol), tape_len))


def _edge(move: str, tape_len: int) -> Var:
    return _h(1) if move == "L" else _h(tape_len)


def error_condition(spec: TmSpec, tape_len: int) -> ConditionExpr:
    """No rule applies outside HALT, or the applicable rule leaves the tape."""
    rules = list(spec.ordered_rules())
    if not rules:
        return Not(halt_condition())
    conds = [rule_condition(spec, st, sym, tape_len) for st, sym, _ in rules]
    no_rule = And(Not(any_of(*conds)), Not(halt_condition()))
    off_tape = [And(c, _edge(r.move, tape_len)) for c, (_, _, r) in zip(conds, rules)]
    return any_of(no_rule, *off_tape)


def _legend(spec: TmSpec) -> tuple[tuple[str, str], ...]:
    states = [(s, encode_state(s, spec)) for s in spec.states]
    states.append((spec.halt_state, HALT_PAIR))
    return (
        ("states", " ".join(f"{s}={a.letter}{b.letter}" for s, (a, b) in states)),
        ("symbols", " ".join(f"{s}={c.letter}" for s, c in spec.alphabet)),
    )


def _write_blueprint(colour: ColourClass, n: int) -> Blueprint:
    steps = []
    for i in range(1, n + 1):
        steps.append(_transfer(f"tape_{i}", "waste", "all",
                               And(_h(i), Not(_t(i, ColourClass.WHITE)))))
        if colour is not ColourClass.WHITE:
            steps.append(_transfer(f"stock_{colour.value}", f"tape_{i}", FILL_ML, _h(i)))
    return Blueprint(f"Write{colour.value.capitalize()}", (), tuple(steps))


def _move_blueprint(move: str, n: int) -> Blueprint:
    step = 1 if move == "R" else -1
    positions = range(1, n) if move == "R" else range(2, n + 1)
    steps = []
    for i in positions:
        steps.append(_transfer(f"head_{i}", "waste", "all", _h(i)))
        steps.append(_transfer("stock_orange", f"head_{i + step}", FILL_ML, _h(i)))
    return Blueprint("MoveRight" if move == "R" else "MoveLeft", (), tuple(steps))


def _switch_blueprint(state: str, spec: TmSpec) -> Blueprint:
    steps = []
    for j, colour in enumerate(encode_state(state, spec), start=1):
        steps.append(_transfer(f"state_{j}", "waste", "all", Not(_s(j, ColourClass.WHITE))))
        if colour is not ColourClass.WHITE:
            steps.append(_transfer(f"stock_{colour.value}", f"state_{j}", FILL_ML))
    return Blueprint(f"SwitchToState{state}", (), tuple(steps))


def compile_tm(spec: TmSpec, tape_len: int) -> XdlDocument:
    if len(spec.states) > MAX_STATES:
        raise EncodingOverflow(
            f"{len(spec.states)} states; two state vials encode at most {MAX_STATES} plus HALT")
    if len(spec.alphabet) > MAX_SYMBOLS:
        raise EncodingOverflow(f"{len(spec.alphabet)} symbols; at most {MAX_SYMBOLS} colours")
    if tape_len < 1:
        raise CompileError("tape_len must be >= 1")
    if spec.initial_head > tape_len:
        raise CompileError(f"initial head {spec.initial_head} is outside a {tape_len}-cell tape")
    n = tape_len

    read_state = Blueprint("ReadState", (), tuple(
        _measure(f"S{j}_{c.value}", f"state_{j}", c)
        for j in range(1, STATE_VIALS + 1) for c in SYMBOL_COLOURS))
    read_tape_steps = [_measure(f"H_{i}", f"head_{i}", ColourClass.ORANGE) for i in range(1, n + 1)]
    for i in range(1, n + 1):
        for _, colour in spec.alphabet:
            read_tape_steps.append(_measure(f"T_{i}_{colour.value}", f"tape_{i}", colour))
    read_tape = Blueprint("ReadTape", (), tuple(read_tape_steps))

    table = []
    writes, moves, switches = {}, {}, {}
    for state, symbol, rule in spec.ordered_rules():
        guard = And(rule_condition(spec, state, symbol, n), Not(_edge(rule.move, n)))
        colour = spec.colour_of(rule.write)
        writes.setdefault(colour, _write_blueprint(colour, n))
        moves.setdefault(rule.move, _move_blueprint(rule.move, n))
        switches.setdefault(rule.next, _switch_blueprint(rule.next, spec))
        table.append(Step(writes[colour].id, condition=guard))
        table.append(Step(moves[rule.move].id, condition=guard))
        table.append(Step(switches[rule.next].id, condition=guard))
    if not table:
        table.append(Step("Wait", (("time", "0"),)))
    lookup = Blueprint("LookUpTable", (), tuple(table))

    transition = Blueprint("Transition", (), (
        Step("ResetVariables", _legend(spec)),
        Step("ReadState"),
        Step("ReadTape"),
        Step("LookUpTable"),
    ))
    keep_going = And(Not(halt_condition()), Not(error_condition(spec, n)))
    machine = Blueprint("TuringMachine", (), (
        Step("Transition"),
        Step("Repeat", (("while_condition", print_condition(keep_going)),),
             children=(Step("Transition"),)),
    ))
    blueprints = [machine, transition, read_state, read_tape, lookup]
    blueprints += list(writes.values()) + list(moves.values()) + list(switches.values())
    return XdlDocument(tuple(blueprints), (Step("TuringMachine"),))


def render_compiled(spec: TmSpec, tape_len: int) -> str:
    """XDL source for the compiled machine, with the inline definitions
    of HALT and ERROR spelled out in comments."""
    doc = compile_tm(spec, tape_len)
    comments = {
        "TuringMachine": (
            f"compiled from a {len(spec.states)}-state machine over "
            f"{{{', '.join(spec.symbols)}}} on a {tape_len}-cell tape\n"
            f"HALT  := {print_condition(halt_condition())}\n"
            f"ERROR := {print_condition(error_condition(spec, tape_len))}"),
    }
    return print_document(doc, comments)


def leaf_steps_per_transition(spec: TmSpec, tape_len: int) -> int:
    """Upper bound on executed leaf steps in one Transition iteration.

    Reset + state reads + head reads + tape reads, plus at most one rule's
    write (2), move (2) and switch (4) transfers.
    """
    reads = STATE_VIALS * len(SYMBOL_COLOURS) + tape_len + tape_len * len(spec.alphabet)
    return 1 + reads + 2 + 2 + 2 * STATE_VIALS


@dataclass
class CompiledRun:
    configurations: list[TmConfiguration]
    outcome: str  # halt | error | cap
    trace: list[TraceEvent]
    platform: Optional[Platform]

    @property
    def transitions(self) -> int:
        return len(self.configurations) - 1


def iteration_snapshots(trace: list[TraceEvent]) -> list[dict]:
    """Vessel snapshots taken at the top of every Transition iteration."""
    return [e.vessel_snapshot for e in trace
            if e.step_name == "ResetVariables" and e.executed and e.vessel_snapshot is not None]


def run_compiled(spec: TmSpec, c0: TmConfiguration, max_transitions: int = 100,
                 sigma: float = 0.0, seed: int = 0) -> CompiledRun:
    """Compile, load ``c0`` onto a standard platform, run, and decode the
    configuration at the top of every Transition iteration."""
    n = len(c0.tape)
    doc = compile_tm(spec, n)
    base = standard_platform(n, n, STATE_VIALS)
    base.camera_noise_sigma = sigma
    base.rng_seed = seed
    platform = load_configuration(base, spec, c0)
    budget = leaf_steps_per_transition(spec, n) * (max_transitions + 1)
    try:
        final, trace = run(doc, platform, ExecutionConfig(max_steps=budget))
        capped = False
    except NonTermination as exc:
        final, trace, capped = exc.platform, exc.trace, True
    configs = [decode_snapshot(s, spec) for s in iteration_snapshots(trace)]
    if capped:
        return CompiledRun(configs[:max_transitions + 1], "cap", trace, final)
    # the last iteration only read the final configuration
    outcome = "halt" if configs[-1].state == spec.halt_state else "error"
    return CompiledRun(configs, outcome, trace, final)
