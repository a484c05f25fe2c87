"""Bundled machines and a seeded generator of small random machines."""

from __future__ import annotations

import random
from importlib import resources

from ..colour import ColourClass
from .machine import Rule, TmConfiguration, TmSpec, load_machine

BUSY_BEAVER_3 = "busy_beaver_3"
BINARY_ADDER = "binary_adder"


def data_path(filename: str):
    return resources.files("xdlvm") / "data" / filename


def fixture_machine(name: str) -> TmSpec:
    with resources.as_file(data_path(f"{name}.json")) as path:
        return load_machine(path)


def adder_tape(a: int, b: int) -> str:
    """``abc x 0def``: a 3-bit left operand, separator, 4-bit right operand."""
    if not (0 <= a < 8 and 0 <= b < 16):
        raise ValueError("operands must fit 3 and 4 bits")
    return f"{a:03b}x{b:04b}"


def random_binary_machine(seed: int, n_states: int = None, tape_len: int = 8,
                          missing_rule_p: float = 0.1, halt_p: float = 0.2):
    """A random 2- or 3-state binary machine and a random start configuration.

    Some (state, symbol) pairs are left without a rule so that the
    no-rule path is exercised too.
    """
    rng = random.Random(seed)
    n_states = n_states or rng.choice((2, 3))
    states = "ABC"[:n_states]
    rules = {}
    for state in states:
        for symbol in "01":
            if rng.random() < missing_rule_p:
                continue
            nxt = "HALT" if rng.random() < halt_p else rng.choice(states)
            rules[state, symbol] = Rule(rng.choice("01"), rng.choice("LR"), nxt)
    spec = TmSpec(
        states=tuple(states),
        alphabet=(("0", ColourClass.WHITE), ("1", ColourClass.ORANGE)),
        blank="0",
        rules=rules,
        initial_state="A",
        initial_head=rng.randint(1, tape_len),
    )
    tape = tuple(rng.choice("01") for _ in range(tape_len))
    return spec, TmConfiguration(tape, spec.initial_head, spec.initial_state)
