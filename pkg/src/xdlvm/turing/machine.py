"""Abstract Turing machines and the reference (oracle) executor.

The oracle works on plain symbol lists and knows nothing about vials,
documents or the camera; it is the independent side of every
compiled-versus-abstract comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..colour import SYMBOL_COLOURS, ColourClass, parse_colour_class
from ..document import is_identifier
from ..errors import ConfigError, XdlError

MOVES = ("L", "R")


class OracleError(XdlError):
    configuration = None


class NoRule(OracleError):
    def __init__(self, state, symbol, configuration=None):
        self.state = state
        self.symbol = symbol
        self.configuration = configuration
        super().__init__(f"no rule for state {state!r} reading {symbol!r}")


class TapeBounds(OracleError):
    def __init__(self, configuration=None, move=None):
        self.configuration = configuration
        self.move = move
        super().__init__(f"head moved {move} past the end of the finite tape")


@dataclass(frozen=True)
class Rule:
    write: str
    move: str
    next: str


@dataclass(frozen=True)
class TmSpec:
    states: tuple[str, ...]
    alphabet: tuple[tuple[str, ColourClass], ...]
    blank: str
    rules: dict = field(hash=False)
    initial_state: str
    initial_head: int = 1
    halt_state: str = "HALT"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(
            self, "alphabet",
            tuple((s, c if isinstance(c, ColourClass) else parse_colour_class(c))
                  for s, c in self.alphabet))
        object.__setattr__(
            self, "rules",
            {tuple(k): (v if isinstance(v, Rule) else Rule(*v)) for k, v in self.rules.items()})
        problems = list(self._problems())
        if problems:
            raise ConfigError("invalid machine: " + "; ".join(problems))

    def _problems(self):
        states = set(self.states)
        if len(states) != len(self.states):
            yield "duplicate state names"
        for s in self.states + (self.halt_state,):
            if not is_identifier(s):
                yield f"state name {s!r} is not an identifier"
        if self.halt_state in states:
            yield "halt state must not be listed among the states"
        symbols = [s for s, _ in self.alphabet]
        colours = [c for _, c in self.alphabet]
        if len(set(symbols)) != len(symbols):
            yield "duplicate alphabet symbols"
        if len(set(colours)) != len(colours):
            yield "alphabet colours must be distinct"
        for c in colours:
            if c not in SYMBOL_COLOURS:
                yield f"colour {c.value} cannot encode a symbol"
        if self.blank not in symbols:
            yield f"blank {self.blank!r} is not in the alphabet"
        elif dict(self.alphabet)[self.blank] is not ColourClass.WHITE:
            yield "blank must map to white (an empty vial)"
        if self.initial_state not in states and self.initial_state != self.halt_state:
            yield f"initial state {self.initial_state!r} is undeclared"
        if self.initial_head < 1:
            yield "initial_head is 1-based"
        for (state, read), rule in self.rules.items():
            if state not in states:
                yield f"rule for undeclared state {state!r}"
            if read not in symbols:
                yield f"rule reads undeclared symbol {read!r}"
            if rule.write not in symbols:
                yield f"rule writes undeclared symbol {rule.write!r}"
            if rule.move not in MOVES:
                yield f"move must be L or R, got {rule.move!r}"
            if rule.next not in states and rule.next != self.halt_state:
                yield f"rule switches to undeclared state {rule.next!r}"

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.alphabet)

    def colour_of(self, symbol: str) -> ColourClass:
        return dict(self.alphabet)[symbol]

    def symbol_of(self, colour: ColourClass) -> Optional[str]:
        for s, c in self.alphabet:
            if c is colour:
                return s
        return None

    def ordered_rules(self):
        """Rules in state-declaration then alphabet order."""
        for state in self.states:
            for symbol in self.symbols:
                if (state, symbol) in self.rules:
                    yield state, symbol, self.rules[state, symbol]

    # -- serialization ----------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "TmSpec":
        allowed = {"states", "halt", "alphabet", "blank", "initial_state", "initial_head", "rules"}
        extra = set(data) - allowed
        if extra:
            raise ConfigError(f"machine: unknown keys {sorted(extra)}")
        try:
            rules = {}
            for r in data["rules"]:
                key = (r["state"], r["read"])
                if key in rules:
                    raise ConfigError(f"duplicate rule for {key}")
                rules[key] = Rule(r["write"], r["move"], r["next"])
            return cls(
                states=tuple(data["states"]),
                alphabet=tuple((a["symbol"], a["colour"]) for a in data["alphabet"]),
                blank=data["blank"],
                rules=rules,
                initial_state=data["initial_state"],
                initial_head=int(data.get("initial_head", 1)),
                halt_state=data.get("halt", "HALT"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"machine: malformed field {exc}") from None

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "halt": self.halt_state,
            "alphabet": [{"symbol": s, "colour": c.value} for s, c in self.alphabet],
            "blank": self.blank,
            "initial_state": self.initial_state,
            "initial_head": self.initial_head,
            "rules": [
                {"state": st, "read": sym, "write": r.write, "move": r.move, "next": r.next}
                for st, sym, r in self.ordered_rules()
            ],
        }


def load_machine(path) -> TmSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            return TmSpec.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class TmConfiguration:
    tape: tuple[str, ...]
    head: int
    state: str

    def __post_init__(self):
        object.__setattr__(self, "tape", tuple(self.tape))
        if not 1 <= self.head <= len(self.tape):
            raise ValueError(f"head {self.head} outside tape of length {len(self.tape)}")

    @property
    def read(self) -> str:
        return self.tape[self.head - 1]

    def tape_string(self) -> str:
        if all(len(s) == 1 for s in self.tape):
            return "".join(self.tape)
        return " ".join(self.tape)


def parse_tape(spec: TmSpec, text: Optional[str], tape_len: Optional[int] = None
               ) -> tuple[str, ...]:
    """Split a tape string into symbols and pad with blanks to ``tape_len``.

    Single-character alphabets take one symbol per character; otherwise
    symbols are separated by whitespace or commas.
    """
    text = text or ""
    if all(len(s) == 1 for s in spec.symbols):
        cells = [c for c in text if not c.isspace()]
    else:
        cells = text.replace(",", " ").split()
    for c in cells:
        if c not in spec.symbols:
            raise ValueError(f"tape symbol {c!r} is not in the alphabet")
    if tape_len is None:
        tape_len = len(cells)
    if len(cells) > tape_len:
        raise ValueError(f"tape has {len(cells)} cells but tape length is {tape_len}")
    return tuple(cells) + (spec.blank,) * (tape_len - len(cells))


def initial_configuration(spec: TmSpec, tape, head: Optional[int] = None) -> TmConfiguration:
    if isinstance(tape, str):
        tape = parse_tape(spec, tape)
    return TmConfiguration(tuple(tape), spec.initial_head if head is None else head,
                           spec.initial_state)


class Halted:
    """Returned by :func:`oracle_step` when the machine is already halted."""

    def __repr__(self):
        return "HALTED"


HALTED = Halted()


def oracle_step(spec: TmSpec, c: TmConfiguration, unbounded: bool = False):
    """One transition: write, move, switch. Returns :data:`HALTED` in the halt state.

    With ``unbounded`` the tape grows with blanks instead of raising
    :class:`TapeBounds`.
    """
    if c.state == spec.halt_state:
        return HALTED
    rule = spec.rules.get((c.state, c.read))
    if rule is None:
        raise NoRule(c.state, c.read, c)
    tape = list(c.tape)
    tape[c.head - 1] = rule.write
    head = c.head + (1 if rule.move == "R" else -1)
    if head < 1 or head > len(tape):
        if not unbounded:
            raise TapeBounds(c, rule.move)
        if head < 1:
            tape.insert(0, spec.blank)
            head = 1
        else:
            tape.append(spec.blank)
    return TmConfiguration(tuple(tape), head, rule.next)


@dataclass
class OracleRun:
    configurations: list[TmConfiguration]
    outcome: str  # halt | no_rule | tape_bounds | cap
    error: Optional[OracleError] = None

    @property
    def transitions(self) -> int:
        return len(self.configurations) - 1

    @property
    def final(self) -> TmConfiguration:
        return self.configurations[-1]


def oracle_trace(spec: TmSpec, c0: TmConfiguration, max_transitions: int,
                 unbounded: bool = False) -> OracleRun:
    configs = [c0]
    c = c0
    while True:
        if c.state == spec.halt_state:
            return OracleRun(configs, "halt")
        if len(configs) - 1 >= max_transitions:
            return OracleRun(configs, "cap")
        try:
            c = oracle_step(spec, c, unbounded)
        except NoRule as exc:
            return OracleRun(configs, "no_rule", exc)
        except TapeBounds as exc:
            return OracleRun(configs, "tape_bounds", exc)
        configs.append(c)


def oracle_run(spec: TmSpec, c0: TmConfiguration, max_transitions: int,
               unbounded: bool = False) -> tuple[TmConfiguration, int, bool]:
    """Iterate to halt or cap; returns ``(final, transitions, halted)``.

    NoRule and TapeBounds propagate.
    """
    result = oracle_trace(spec, c0, max_transitions, unbounded)
    if result.error is not None:
        raise result.error
    return result.final, result.transitions, result.outcome == "halt"
