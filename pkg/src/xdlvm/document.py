"""Immutable document tree for conditional XDL.

A document is a list of blueprints plus the main procedure. Attribute
values stay strings; typed interpretation happens at execution time.
Conditions are parsed up front into small Boolean expression trees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
KEYWORDS = frozenset({"and", "or", "not", "true", "false"})

BUILTIN_STEPS = frozenset(
    {"Transfer", "Measure", "Repeat", "ResetVariables", "Wait", "Stir", "Heat", "Add"}
)
LEAF_STEPS = BUILTIN_STEPS - {"Repeat"}


def is_identifier(name: str) -> bool:
    return bool(IDENTIFIER.match(name)) and name.lower() not in KEYWORDS


# -- condition expressions ----------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not is_identifier(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True)
class Literal:
    value: bool


@dataclass(frozen=True)
class Not:
    operand: "ConditionExpr"


@dataclass(frozen=True)
class And:
    left: "ConditionExpr"
    right: "ConditionExpr"


@dataclass(frozen=True)
class Or:
    left: "ConditionExpr"
    right: "ConditionExpr"


ConditionExpr = Union[Var, Literal, Not, And, Or]


def variables(expr: ConditionExpr) -> list[str]:
    """Variable names in first-occurrence order."""
    seen: dict[str, None] = {}
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            seen.setdefault(node.name)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.append(node.right)
            stack.append(node.left)
    return list(seen)


def all_of(*terms: ConditionExpr) -> ConditionExpr:
    """Left-associated conjunction; the parser produces the same shape."""
    out = terms[0]
    for t in terms[1:]:
        out = And(out, t)
    return out


def any_of(*terms: ConditionExpr) -> ConditionExpr:
    out = terms[0]
    for t in terms[1:]:
        out = Or(out, t)
    return out


# -- document tree ------------------------------------------------------------


def _freeze_attributes(attrs) -> tuple[tuple[str, str], ...]:
    if isinstance(attrs, Mapping):
        attrs = attrs.items()
    return tuple((str(k), str(v)) for k, v in attrs)


@dataclass(frozen=True)
class Step:
    name: str
    attributes: tuple[tuple[str, str], ...] = ()
    condition: Optional[ConditionExpr] = None
    children: tuple["Step", ...] = ()
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "attributes", _freeze_attributes(self.attributes))
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def attrs(self) -> dict[str, str]:
        return dict(self.attributes)

    def get(self, key: str, default=None):
        for k, v in self.attributes:
            if k == key:
                return v
        return default

    def walk(self) -> Iterator["Step"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class Param:
    name: str
    default: Optional[str] = None


@dataclass(frozen=True)
class Blueprint:
    id: str
    params: tuple[Param, ...] = ()
    steps: tuple[Step, ...] = ()
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)

    def __post_init__(self):
        if not self.id:
            raise ValueError("blueprint id must be non-empty")
        params = tuple(p if isinstance(p, Param) else Param(*p) for p in self.params)
        names = [p.name.lower() for p in params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in blueprint {self.id!r}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "steps", tuple(self.steps))

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name.lower() == name.lower():
                return p
        return None


@dataclass(frozen=True)
class XdlDocument:
    blueprints: tuple[Blueprint, ...] = ()
    main_steps: tuple[Step, ...] = ()

    def __post_init__(self):
        blueprints = tuple(self.blueprints)
        ids = [b.id for b in blueprints]
        if len(set(ids)) != len(ids):
            raise ValueError("blueprint identifiers must be unique")
        object.__setattr__(self, "blueprints", blueprints)
        object.__setattr__(self, "main_steps", tuple(self.main_steps))

    def blueprint(self, name: str) -> Optional[Blueprint]:
        for b in self.blueprints:
            if b.id == name:
                return b
        return None

    def all_steps(self) -> Iterator[Step]:
        """Every step occurrence in the source, blueprints first."""
        for b in self.blueprints:
            for s in b.steps:
                yield from s.walk()
        for s in self.main_steps:
            yield from s.walk()


def _normalize_step(step: Step) -> Step:
    attrs: dict[str, str] = {}
    for k, v in step.attributes:
        attrs[k.strip().lower()] = v.strip()
    return Step(
        step.name,
        tuple(attrs.items()),
        step.condition,
        tuple(_normalize_step(c) for c in step.children),
        step.line,
        step.column,
    )


def normalize(doc: XdlDocument) -> XdlDocument:
    """Lower-case attribute keys and trim values; idempotent.

    Parameter names are lower-cased too so invocation attributes keep
    matching the blueprint signature after normalization.
    """
    blueprints = tuple(
        Blueprint(
            b.id,
            tuple(Param(p.name.strip().lower(), None if p.default is None else p.default.strip())
                  for p in b.params),
            tuple(_normalize_step(s) for s in b.steps),
            b.line,
            b.column,
        )
        for b in doc.blueprints
    )
    return XdlDocument(blueprints, tuple(_normalize_step(s) for s in doc.main_steps))
