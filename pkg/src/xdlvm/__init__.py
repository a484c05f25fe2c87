"""Conditional XDL on a virtual liquid-handling platform, with a compiler
from Turing machines to XDL blueprints."""

from .chemputer import (
    LiquidSample,
    Platform,
    Vessel,
    load_platform,
    observation_space_size,
    save_platform,
    standard_platform,
)
from .colour import ColourClass, classify_rgb
from .conditions import MeasuredValue, VariableStore, bind, compare, evaluate
from .document import And, Blueprint, Literal, Not, Or, Step, Var, XdlDocument, normalize
from .parser import ParseDiagnostic, parse_condition, parse_document, print_condition, print_document
from .runtime import ExecutionConfig, TraceEvent, check, read_trace, run, write_trace

__version__ = "0.1.0"
