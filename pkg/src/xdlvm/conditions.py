"""Truth-value store, condition evaluation and the Measure comparison kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, MutableMapping, Optional

from .colour import ColourClass, parse_colour_class
from .document import And, ConditionExpr, Literal, Not, Or, Var
from .errors import ComparatorMismatch, UndefinedVariable, UnparseableComparisonValue

COMPARATORS = frozenset({"equal", "not_equal", "less_than", "greater_than", "in_range"})
UNITS = {"temperature": "°C", "ph": "pH", "volume": "mL"}


class VariableStore(MutableMapping):
    """Named Boolean results of Measure steps. Rebinding overwrites."""

    def __init__(self, bindings: Optional[Mapping[str, bool]] = None):
        self._data: dict[str, bool] = {}
        for k, v in (bindings or {}).items():
            self[k] = v

    def __getitem__(self, key: str) -> bool:
        return self._data[key]

    def __setitem__(self, key: str, value: bool):
        if not key:
            raise ValueError("variable names must be non-empty")
        if not isinstance(value, bool):
            raise TypeError(f"variables hold True or False, got {value!r}")
        self._data[key] = value

    def __delitem__(self, key: str):
        del self._data[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self):
        return f"VariableStore({self._data!r})"

    def bind(self, step_id: str, value: bool) -> "VariableStore":
        self[step_id] = value
        return self

    def copy(self) -> "VariableStore":
        return VariableStore(self._data)


def bind(store: VariableStore, step_id: str, value: bool) -> VariableStore:
    """Functional variant of :meth:`VariableStore.bind`; ``store`` is untouched."""
    return store.copy().bind(step_id, value)


def evaluate(expr: ConditionExpr, store: Mapping[str, bool]) -> bool:
    """Evaluate ``expr`` against ``store``.

    Every operand is evaluated (no short-circuit), so a reference to a
    variable no Measure has bound always raises UndefinedVariable.
    Chains of the same binary operator are walked iteratively.
    """
    if isinstance(expr, Var):
        try:
            return store[expr.name]
        except KeyError:
            raise UndefinedVariable(expr.name) from None
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Not):
        return not evaluate(expr.operand, store)
    kind = type(expr)
    operands = []
    node = expr
    while type(node) is kind:
        operands.append(node.right)
        node = node.left
    operands.append(node)
    values = [evaluate(e, store) for e in reversed(operands)]
    return all(values) if kind is And else any(values)


@dataclass(frozen=True)
class MeasuredValue:
    kind: str  # "colour" | "number"
    colour: Optional[ColourClass] = None
    number: Optional[float] = None
    unit: Optional[str] = None

    def __post_init__(self):
        if self.kind == "colour":
            if self.colour is None or self.number is not None:
                raise ValueError("colour measurement needs exactly a colour payload")
        elif self.kind == "number":
            if self.number is None or self.colour is not None:
                raise ValueError("numeric measurement needs exactly a number payload")
        else:
            raise ValueError(f"unknown measurement kind {self.kind!r}")

    @classmethod
    def of_colour(cls, colour: ColourClass) -> "MeasuredValue":
        return cls("colour", colour=colour)

    @classmethod
    def of_number(cls, number: float, unit: Optional[str] = None) -> "MeasuredValue":
        return cls("number", number=float(number), unit=unit)


def _number(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise UnparseableComparisonValue(f"expected a number, got {text!r}") from None
    if math.isnan(value):
        raise UnparseableComparisonValue("NaN is not a comparison value")
    return value


def compare(value: MeasuredValue, true_if: str, comparison_value: str) -> bool:
    if true_if not in COMPARATORS:
        raise ComparatorMismatch(f"unknown comparator {true_if!r}")
    if value.kind == "colour":
        if true_if not in ("equal", "not_equal"):
            raise ComparatorMismatch(f"{true_if} is not defined for colours")
        try:
            target = parse_colour_class(comparison_value)
        except ValueError:
            raise UnparseableComparisonValue(
                f"{comparison_value!r} is not a colour class") from None
        return (value.colour is target) == (true_if == "equal")

    x = value.number
    if true_if == "in_range":
        lo, sep, hi = comparison_value.partition("..")
        if not sep:
            raise UnparseableComparisonValue(f"expected 'lo..hi', got {comparison_value!r}")
        return _number(lo.strip()) <= x <= _number(hi.strip())
    target = _number(comparison_value.strip())
    if true_if == "equal":
        return x == target
    if true_if == "not_equal":
        return x != target
    if true_if == "less_than":
        return x < target
    return x > target
