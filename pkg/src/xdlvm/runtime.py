"""Executes XDL documents against a platform and statically checks them."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, TextIO

from .chemputer import LiquidSample, Platform
from .colour import ColourClass, DEFAULT_PALETTE, parse_colour_class
from .conditions import UNITS, MeasuredValue, VariableStore, compare, evaluate
from .document import BUILTIN_STEPS, LEAF_STEPS, Step, XdlDocument, variables
from .errors import (
    InvalidStep,
    NonTermination,
    UnknownStepName,
    XdlError,
    XdlSyntaxError,
)
from .parser import ParseDiagnostic, parse_condition, print_condition

MEASURE_ATTRIBUTES = ("step_id", "target", "quantity", "true_if", "comparison_value")
VESSEL_ATTRIBUTES = ("target", "from", "to", "vessel")
MAX_CALL_DEPTH = 64
SNAPSHOT_STEPS = frozenset({"Transfer", "Add", "ResetVariables"})

_PARAM_REF = re.compile(r"\$([A-Za-z_][A-Za-z0-9_]*)")


@dataclass
class ExecutionConfig:
    max_steps: int = 10_000
    trace_sink: Optional[TextIO] = None
    initial_bindings: Optional[dict[str, bool]] = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class TraceEvent:
    seq: int
    step_name: str
    attributes: dict[str, str] = field(default_factory=dict)
    condition: Optional[str] = None
    condition_value: Optional[bool] = None
    executed: bool = True
    store_delta: dict[str, Optional[bool]] = field(default_factory=dict)
    vessel_snapshot: Optional[dict[str, tuple[ColourClass, float]]] = None

    def to_json(self) -> dict[str, Any]:
        snap = None
        if self.vessel_snapshot is not None:
            snap = {k: [c.value, vol] for k, (c, vol) in self.vessel_snapshot.items()}
        return {
            "seq": self.seq,
            "step_name": self.step_name,
            "attributes": self.attributes,
            "condition": self.condition,
            "condition_value": self.condition_value,
            "executed": self.executed,
            "store_delta": self.store_delta,
            "vessel_snapshot": snap,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "TraceEvent":
        snap = data.get("vessel_snapshot")
        if snap is not None:
            snap = {k: (ColourClass(c), float(vol)) for k, (c, vol) in snap.items()}
        return cls(
            seq=data["seq"],
            step_name=data["step_name"],
            attributes=dict(data.get("attributes") or {}),
            condition=data.get("condition"),
            condition_value=data.get("condition_value"),
            executed=data.get("executed", True),
            store_delta=dict(data.get("store_delta") or {}),
            vessel_snapshot=snap,
        )


def write_trace(trace: Iterable[TraceEvent], fh: TextIO):
    for event in trace:
        fh.write(json.dumps(event.to_json(), separators=(",", ":")) + "\n")


def read_trace(fh: TextIO) -> list[TraceEvent]:
    return [TraceEvent.from_json(json.loads(line)) for line in fh if line.strip()]


def substitute(value: str, bindings: dict[str, str]) -> str:
    def repl(m):
        key = m.group(1).lower()
        if key not in bindings:
            raise InvalidStep(f"unresolved parameter reference ${m.group(1)}")
        return bindings[key]

    return _PARAM_REF.sub(repl, value) if "$" in value else value


class _Executor:
    def __init__(self, doc: XdlDocument, platform: Platform, cfg: ExecutionConfig):
        self.doc = doc
        self.platform = platform
        self.cfg = cfg
        self.store = VariableStore(cfg.initial_bindings)
        self.trace: list[TraceEvent] = []
        self.leaf_steps = 0
        self.loop_iterations = 0
        self.blueprints = {b.id: b for b in doc.blueprints}
        self._condition_text: dict[int, str] = {}

    def emit(self, step: Step, attrs, cond_value, executed, delta=None, snapshot=False):
        text = None
        if step.condition is not None:
            key = id(step.condition)
            text = self._condition_text.get(key)
            if text is None:
                text = self._condition_text[key] = print_condition(step.condition)
        event = TraceEvent(
            seq=len(self.trace),
            step_name=step.name,
            attributes=dict(attrs),
            condition=text,
            condition_value=cond_value,
            executed=executed,
            store_delta=delta or {},
            vessel_snapshot=self.platform.snapshot() if snapshot else None,
        )
        self.trace.append(event)
        if self.cfg.trace_sink is not None:
            self.cfg.trace_sink.write(json.dumps(event.to_json(), separators=(",", ":")) + "\n")

    def run_steps(self, steps, bindings, depth):
        for step in steps:
            self.run_step(step, bindings, depth)

    def run_step(self, step: Step, bindings: dict[str, str], depth: int):
        attrs = {k: substitute(v, bindings) for k, v in step.attributes}
        cond_value = None
        if step.condition is not None:
            cond_value = evaluate(step.condition, self.store)
            if not cond_value:
                self.emit(step, attrs, False, executed=False)
                return
        name = step.name
        if name == "Repeat":
            self.emit(step, attrs, cond_value, True)
            self.repeat(step, attrs, bindings, depth)
        elif name in LEAF_STEPS:
            if self.leaf_steps >= self.cfg.max_steps:
                raise NonTermination(f"max_steps={self.cfg.max_steps} exceeded")
            self.leaf_steps += 1
            delta = self.leaf(step, attrs)
            self.emit(step, attrs, cond_value, True, delta, snapshot=name in SNAPSHOT_STEPS)
        elif name in self.blueprints:
            if depth >= MAX_CALL_DEPTH:
                raise NonTermination(f"blueprint call depth exceeds {MAX_CALL_DEPTH}")
            bp = self.blueprints[name]
            inner = {}
            for key, value in attrs.items():
                if bp.param(key) is None:
                    raise InvalidStep(f"blueprint {name} has no parameter {key!r}")
                inner[key.lower()] = value
            for p in bp.params:
                if p.name.lower() not in inner:
                    if p.default is None:
                        raise InvalidStep(f"blueprint {name} requires parameter {p.name!r}")
                    inner[p.name.lower()] = p.default
            self.emit(step, attrs, cond_value, True)
            self.run_steps(bp.steps, inner, depth + 1)
        else:
            raise UnknownStepName(f"unknown step {name!r} at {step.line}:{step.column}")

    def repeat(self, step, attrs, bindings, depth):
        has_times = "times" in attrs
        has_while = "while_condition" in attrs
        if has_times == has_while:
            raise InvalidStep("Repeat needs exactly one of 'times' or 'while_condition'")
        if has_times:
            try:
                n = int(attrs["times"])
            except ValueError:
                n = 0
            if n < 1:
                raise InvalidStep(f"Repeat times must be a positive integer: {attrs['times']!r}")
            for _ in range(n):
                self.run_steps(step.children, bindings, depth)
            return
        cond = parse_condition(attrs["while_condition"])
        while evaluate(cond, self.store):
            self.loop_iterations += 1
            if self.loop_iterations > self.cfg.max_steps:
                raise NonTermination(f"loop iterations exceed max_steps={self.cfg.max_steps}")
            self.run_steps(step.children, bindings, depth)

    def _require(self, name, attrs, keys):
        missing = [k for k in keys if k not in attrs]
        if missing:
            raise InvalidStep(f"{name} is missing {', '.join(missing)}")

    def leaf(self, step: Step, attrs: dict[str, str]) -> dict[str, Optional[bool]]:
        name = step.name
        p = self.platform
        if name == "Transfer":
            self._require(name, attrs, ("from", "to", "volume"))
            p.transfer(attrs["from"], attrs["to"], attrs["volume"])
        elif name == "Measure":
            self._require(name, attrs, MEASURE_ATTRIBUTES)
            quantity = attrs["quantity"].lower()
            if quantity in ("colour", "color"):
                value = MeasuredValue.of_colour(p.observe_colour(attrs["target"]))
            elif quantity in UNITS:
                value = MeasuredValue.of_number(p.reading(attrs["target"], quantity),
                                                UNITS[quantity])
            else:
                raise InvalidStep(f"unknown measured quantity {attrs['quantity']!r}")
            result = compare(value, attrs["true_if"], attrs["comparison_value"])
            self.store.bind(attrs["step_id"], result)
            return {attrs["step_id"]: result}
        elif name == "ResetVariables":
            delta = {k: None for k in self.store}
            self.store.clear()
            return delta
        elif name == "Add":
            self._require(name, attrs, ("vessel", "reagent", "volume"))
            if "rgb" in attrs:
                rgb = tuple(int(c) for c in attrs["rgb"].split(","))
            else:
                colour = parse_colour_class(attrs.get("colour", "white"))
                rgb = p.palette.get(colour, DEFAULT_PALETTE[ColourClass.WHITE])
            p.add(attrs["vessel"], LiquidSample.of_ml(attrs["reagent"], attrs["volume"], rgb))
        # Wait, Stir and Heat are recorded but have no modelled effect
        return {}


def run(doc: XdlDocument, platform: Platform, cfg: Optional[ExecutionConfig] = None):
    """Run ``doc`` on a copy of ``platform``; returns ``(platform, trace)``.

    Any error raised carries ``trace`` (events up to the failure) and
    ``platform`` (state at the failure).
    """
    cfg = cfg or ExecutionConfig()
    ex = _Executor(doc, platform.copy(), cfg)
    try:
        ex.run_steps(doc.main_steps, {}, 0)
    except (XdlError, ValueError) as exc:
        if not isinstance(exc, XdlError):
            exc = InvalidStep(str(exc))
        exc.trace = ex.trace
        exc.platform = ex.platform
        raise exc
    return ex.platform, ex.trace


# -- static check -------------------------------------------------------------


def check(doc: XdlDocument, platform: Platform) -> list[ParseDiagnostic]:
    """Dry-run validation that never touches liquids."""
    diags: dict[tuple, ParseDiagnostic] = {}

    def report(step, message, severity="error"):
        d = ParseDiagnostic(max(step.line, 1), max(step.column, 1), message, severity)
        diags.setdefault((d.line, d.column, message), d)

    blueprints = {b.id: b for b in doc.blueprints}

    measured: dict[str, Step] = {}
    for step in doc.all_steps():
        if step.name == "Measure" and "step_id" in step.attrs:
            sid = step.attrs["step_id"]
            if sid in measured:
                report(step, f"duplicate Measure step_id {sid!r}")
            else:
                measured[sid] = step

    def check_step(step: Step, params: Optional[set]):
        attrs = step.attrs
        for value in attrs.values():
            for ref in _PARAM_REF.findall(value):
                if params is None or ref.lower() not in params:
                    report(step, f"unresolvable parameter reference ${ref}")
        refs = []
        if step.condition is not None:
            refs += variables(step.condition)
        if step.name == "Measure":
            missing = [k for k in MEASURE_ATTRIBUTES if k not in attrs]
            if missing:
                report(step, f"Measure is missing {', '.join(missing)}")
        elif step.name == "Repeat":
            has_times, has_while = "times" in attrs, "while_condition" in attrs
            if has_times == has_while:
                report(step, "Repeat needs exactly one of 'times' or 'while_condition'")
            elif has_times and not (attrs["times"].isdigit() and int(attrs["times"]) >= 1):
                if "$" not in attrs["times"]:
                    report(step, f"Repeat times must be a positive integer: {attrs['times']!r}")
            elif has_while:
                try:
                    refs += variables(parse_condition(attrs["while_condition"]))
                except XdlSyntaxError as exc:
                    report(step, f"malformed while_condition: {exc.diagnostics[0].message}")
            if not step.children:
                report(step, "Repeat needs at least one child step")
        elif step.name == "Transfer":
            missing = [k for k in ("from", "to", "volume") if k not in attrs]
            if missing:
                report(step, f"Transfer is missing {', '.join(missing)}")
        elif step.name in blueprints:
            bp = blueprints[step.name]
            for key in attrs:
                if bp.param(key) is None:
                    report(step, f"blueprint {bp.id} has no parameter {key!r}")
            for p in bp.params:
                if p.default is None and p.name.lower() not in {k.lower() for k in attrs}:
                    report(step, f"blueprint {bp.id} requires parameter {p.name!r}")
        elif step.name not in BUILTIN_STEPS:
            report(step, f"unknown step name {step.name!r}")
        for ref in refs:
            if ref not in measured:
                report(step, f"condition variable {ref!r} is never measured", "warning")
        for child in step.children:
            check_step(child, params)

    for bp in doc.blueprints:
        names = {p.name.lower() for p in bp.params}
        for s in bp.steps:
            check_step(s, names)
    for s in doc.main_steps:
        check_step(s, None)

    # Vessel references are checked on the expanded call graph so that
    # ids passed through blueprint parameters are covered too.
    seen_calls = set()

    def expand(step: Step, bindings: dict[str, str]):
        resolved = {}
        for k, v in step.attributes:
            try:
                resolved[k] = substitute(v, bindings)
            except InvalidStep:
                resolved[k] = None
        for key in VESSEL_ATTRIBUTES:
            vid = resolved.get(key)
            if vid is not None and vid not in platform.vessels:
                report(step, f"unknown vessel {vid!r} in attribute {key!r}")
        for child in step.children:
            expand(child, bindings)
        bp = blueprints.get(step.name)
        if bp is None or step.name in BUILTIN_STEPS:
            return
        inner = {p.name.lower(): p.default for p in bp.params if p.default is not None}
        inner.update({k.lower(): v for k, v in resolved.items() if v is not None})
        key = (bp.id, tuple(sorted(inner.items())))
        if key in seen_calls:
            return
        seen_calls.add(key)
        for s in bp.steps:
            expand(s, inner)

    for s in doc.main_steps:
        expand(s, {})

    return sorted(diags.values(), key=lambda d: (d.line, d.column, d.severity, d.message))


def has_errors(diags: Iterable[ParseDiagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)
