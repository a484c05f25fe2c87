"""Mapping between machine configurations and vial colours.

Tape vial i holds the colour of symbol i (blank = empty), exactly one
head vial holds orange, and the two state vials hold a colour pair.
"""

from __future__ import annotations

from typing import Callable, Mapping

from ..chemputer import FILL_ML, LiquidSample, Platform, to_microlitres
from ..colour import SYMBOL_COLOURS, ColourClass
from ..errors import XdlError
from .machine import TmConfiguration, TmSpec

MAX_STATES = len(SYMBOL_COLOURS) ** 2 - 1
MAX_SYMBOLS = len(SYMBOL_COLOURS)
HALT_PAIR = (ColourClass.GREEN, ColourClass.GREEN)


class EncodingOverflow(XdlError):
    pass


class CodecError(XdlError):
    pass


class HeadAmbiguous(CodecError):
    pass


class UnknownColour(CodecError):
    pass


class UndecodableState(CodecError):
    pass


def state_pair(k: int) -> tuple[ColourClass, ColourClass]:
    n = len(SYMBOL_COLOURS)
    return SYMBOL_COLOURS[k // n], SYMBOL_COLOURS[k % n]


def encode_state(state: str, spec: TmSpec) -> tuple[ColourClass, ColourClass]:
    """States in declaration order take (W,W), (W,O), (W,B), ...; HALT is (G,G)."""
    if state == spec.halt_state:
        return HALT_PAIR
    try:
        k = spec.states.index(state)
    except ValueError:
        raise ValueError(f"unknown state {state!r}") from None
    if k >= MAX_STATES:
        raise EncodingOverflow(
            f"state {state!r} is number {k + 1}; two vials encode at most {MAX_STATES} states")
    return state_pair(k)


def decode_state(pair, spec: TmSpec) -> str:
    pair = tuple(pair)
    if pair == HALT_PAIR:
        return spec.halt_state
    for k, state in enumerate(spec.states[:MAX_STATES]):
        if state_pair(k) == pair:
            return state
    raise UndecodableState(f"state vials {pair[0].value}/{pair[1].value} encode no state")


def _fill(p: Platform, vessel_id: str, colour: ColourClass):
    if colour is ColourClass.WHITE:
        p.set_contents(vessel_id, [])
    else:
        sample = LiquidSample(f"{colour.value}_dye", to_microlitres(FILL_ML), p.palette[colour])
        p.set_contents(vessel_id, [sample])


def load_configuration(p: Platform, spec: TmSpec, c: TmConfiguration) -> Platform:
    """Copy of ``p`` initialised to configuration ``c``."""
    tapes = p.by_role("tape")
    heads = p.by_role("head")
    states = p.by_role("state")
    if len(c.tape) != len(tapes):
        raise ValueError(f"tape has {len(c.tape)} cells but the platform has {len(tapes)} vials")
    if len(heads) != len(tapes) or len(states) < 2:
        raise ValueError("platform needs matching head vials and two state vials")
    out = p.copy()
    for vial, symbol in zip(tapes, c.tape):
        _fill(out, vial.id, spec.colour_of(symbol))
    for i, vial in enumerate(heads, start=1):
        _fill(out, vial.id, ColourClass.ORANGE if i == c.head else ColourClass.WHITE)
    for vial, colour in zip(states, encode_state(c.state, spec)):
        _fill(out, vial.id, colour)
    return out


def _decode(colour_of: Callable[[str], ColourClass], tape_ids, head_ids, state_ids,
            spec: TmSpec) -> TmConfiguration:
    tape = []
    for vid in tape_ids:
        colour = colour_of(vid)
        symbol = spec.symbol_of(colour)
        if symbol is None:
            raise UnknownColour(f"{vid} shows {colour.value}, which encodes no symbol")
        tape.append(symbol)
    filled = [i for i, vid in enumerate(head_ids, start=1)
              if colour_of(vid) is not ColourClass.WHITE]
    if len(filled) != 1:
        raise HeadAmbiguous(f"expected exactly one filled head vial, found {len(filled)}")
    state = decode_state(tuple(colour_of(v) for v in state_ids[:2]), spec)
    return TmConfiguration(tuple(tape), filled[0], state)


def decode_tape(p: Platform, spec: TmSpec) -> TmConfiguration:
    """Read the configuration through the camera (advances its counter)."""
    return _decode(p.observe_colour,
                   [v.id for v in p.by_role("tape")],
                   [v.id for v in p.by_role("head")],
                   [v.id for v in p.by_role("state")], spec)


def _ordered(ids, prefix):
    found = [(int(k[len(prefix):]), k) for k in ids
             if k.startswith(prefix) and k[len(prefix):].isdigit()]
    return [k for _, k in sorted(found)]


def decode_snapshot(snapshot: Mapping[str, tuple], spec: TmSpec) -> TmConfiguration:
    """Decode a trace snapshot (vessel id -> (colour, volume)) by vial naming."""
    ids = list(snapshot)
    return _decode(lambda vid: snapshot[vid][0],
                   _ordered(ids, "tape_"), _ordered(ids, "head_"), _ordered(ids, "state_"), spec)
