"""Hand-rolled parser for the XML subset used by conditional XDL.

Accepted: elements, double-quoted attributes, self-closing tags, nesting
and ``<!-- -->`` comments. Only the ``&amp; &lt; &gt; &quot;`` entities
are decoded. Namespaces, text nodes, DTDs and processing instructions are
rejected with a positioned diagnostic. Parsing is all-or-nothing: any
error raises :class:`XdlSyntaxError` carrying every diagnostic found.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .document import (
    And,
    Blueprint,
    ConditionExpr,
    Literal,
    Not,
    Or,
    Param,
    Step,
    Var,
    XdlDocument,
    is_identifier,
)
from .errors import XdlSyntaxError

MAX_DEPTH = 64

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")
_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "quot": '"'}
_ALIASES = {"Monitor": "Measure"}


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError("diagnostic positions are 1-based")
        if self.severity not in ("error", "warning"):
            raise ValueError(f"bad severity {self.severity!r}")

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.line}:{self.column}: {self.severity}: {self.message}"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class _Abort(Exception):
    pass


@dataclass
class _Element:
    name: str
    attrs: list  # (name, value, line, col, value_line, value_col)
    children: list
    line: int
    col: int


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.diagnostics: list[ParseDiagnostic] = []
        self._line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(self, pos: int) -> tuple[int, int]:
        row = bisect.bisect_right(self._line_starts, pos) - 1
        return row + 1, pos - self._line_starts[row] + 1

    def error(self, pos: int, message: str, fatal: bool = False):
        line, col = self.where(pos)
        self.diagnostics.append(ParseDiagnostic(line, col, message))
        if fatal:
            raise _Abort

    def skip_ws(self):
        text, n = self.text, len(self.text)
        while self.pos < n and text[self.pos] in " \t\r\n":
            self.pos += 1

    def scan(self) -> list[_Element]:
        text = self.text
        n = len(text)
        roots: list[_Element] = []
        stack: list[_Element] = []
        while True:
            self.skip_ws()
            if self.pos >= n:
                break
            start = self.pos
            if text.startswith("<!--", start):
                end = text.find("-->", start + 4)
                if end < 0:
                    self.error(start, "unterminated comment", fatal=True)
                self.pos = end + 3
            elif text.startswith("</", start):
                self.pos += 2
                name = self._name()
                self.skip_ws()
                if not text.startswith(">", self.pos):
                    self.error(self.pos, "expected '>' to close end tag", fatal=True)
                self.pos += 1
                if not stack:
                    self.error(start, f"unbalanced tags: unexpected </{name}>", fatal=True)
                if stack[-1].name != name:
                    self.error(
                        start,
                        f"unbalanced tags: expected </{stack[-1].name}>, found </{name}>",
                        fatal=True,
                    )
                elem = stack.pop()
                (stack[-1].children if stack else roots).append(elem)
            elif text.startswith("<", start):
                if start + 1 < n and text[start + 1] in "?!":
                    self.error(start, "processing instructions, DTDs and CDATA are not supported",
                               fatal=True)
                self.pos += 1
                elem, closed = self._start_tag(start)
                if closed:
                    (stack[-1].children if stack else roots).append(elem)
                else:
                    if len(stack) >= MAX_DEPTH:
                        self.error(start, f"nesting depth exceeds {MAX_DEPTH}", fatal=True)
                    stack.append(elem)
            else:
                self.error(start, "text content is not allowed", fatal=True)
        if stack:
            self.error(len(text), f"unbalanced tags: <{stack[-1].name}> is never closed",
                       fatal=True)
        return roots

    def _name(self) -> str:
        m = _NAME.match(self.text, self.pos)
        if not m:
            self.error(self.pos, "expected a name", fatal=True)
        self.pos = m.end()
        if self.text.startswith(":", self.pos):
            self.error(self.pos, "XML namespaces are not supported", fatal=True)
        return m.group()

    def _start_tag(self, start: int) -> tuple[_Element, bool]:
        text = self.text
        name = self._name()
        line, col = self.where(start)
        elem = _Element(name, [], [], line, col)
        seen = set()
        while True:
            had_ws = self.pos < len(text) and text[self.pos] in " \t\r\n"
            self.skip_ws()
            if text.startswith("/>", self.pos):
                self.pos += 2
                return elem, True
            if text.startswith(">", self.pos):
                self.pos += 1
                return elem, False
            if self.pos >= len(text):
                self.error(start, f"unterminated tag <{name}", fatal=True)
            if not had_ws:
                self.error(self.pos, "expected whitespace before attribute", fatal=True)
            attr_pos = self.pos
            attr = self._name()
            self.skip_ws()
            if not text.startswith("=", self.pos):
                self.error(self.pos, f"expected '=' after attribute {attr!r}", fatal=True)
            self.pos += 1
            self.skip_ws()
            if not text.startswith('"', self.pos):
                self.error(self.pos, "attribute values must be double-quoted", fatal=True)
            value_pos = self.pos + 1
            end = text.find('"', value_pos)
            if end < 0:
                self.error(self.pos, "unterminated attribute value", fatal=True)
            raw = text[value_pos:end]
            self.pos = end + 1
            value = self._decode(raw, value_pos)
            if attr in seen:
                self.error(attr_pos, f"duplicate attribute {attr!r}")
            seen.add(attr)
            elem.attrs.append((attr, value, *self.where(attr_pos), *self.where(value_pos)))

    def _decode(self, raw: str, base: int) -> str:
        if "<" in raw:
            self.error(base + raw.index("<"), "'<' is not allowed in attribute values")
        if "&" not in raw:
            return raw
        out = []
        i = 0
        while i < len(raw):
            c = raw[i]
            if c != "&":
                out.append(c)
                i += 1
                continue
            semi = raw.find(";", i)
            ent = raw[i + 1:semi] if semi > 0 else None
            if ent not in _ENTITIES:
                self.error(base + i, "unsupported entity reference")
                out.append(c)
                i += 1
                continue
            out.append(_ENTITIES[ent])
            i = semi + 1
        return "".join(out)


# -- conditions ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[()])|(?P<bad>\S))")


class _ConditionParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        for m in _TOKEN.finditer(text):
            if m.group("bad"):
                raise self._fail(m.start("bad"), f"unexpected character {m.group('bad')!r}")
            kind = "ident" if m.group("ident") else "punct"
            val = m.group(kind)
            start = m.start(kind)
            if kind == "punct":
                kind = val
            elif kind == "ident" and val.lower() in ("and", "or", "not", "true", "false"):
                kind = val.lower()
            self.tokens.append((kind, val, start))
        self.i = 0
        self.depth = 0

    def _fail(self, offset: int, message: str) -> "_ConditionError":
        return _ConditionError(offset, message)

    def peek(self) -> Optional[str]:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def offset(self) -> int:
        return self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)

    def parse(self) -> ConditionExpr:
        if not self.tokens:
            raise self._fail(0, "empty condition")
        expr = self.or_expr()
        if self.i < len(self.tokens):
            kind, val, off = self.tokens[self.i]
            if kind == ")":
                raise self._fail(off, "unbalanced parentheses: unexpected ')'")
            raise self._fail(off, f"unexpected {val!r}")
        return expr

    def or_expr(self) -> ConditionExpr:
        left = self.and_expr()
        while self.peek() == "or":
            self.i += 1
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> ConditionExpr:
        left = self.not_expr()
        while self.peek() == "and":
            self.i += 1
            left = And(left, self.not_expr())
        return left

    def not_expr(self) -> ConditionExpr:
        nots = 0
        while self.peek() == "not":
            self.i += 1
            nots += 1
        expr = self.atom()
        for _ in range(nots):
            expr = Not(expr)
        return expr

    def atom(self) -> ConditionExpr:
        if self.i >= len(self.tokens):
            raise self._fail(len(self.text), "dangling operator: expected an operand")
        kind, val, off = self.tokens[self.i]
        self.i += 1
        if kind == "ident":
            return Var(val)
        if kind in ("true", "false"):
            return Literal(kind == "true")
        if val == "(":
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise self._fail(off, f"condition nesting exceeds {MAX_DEPTH}")
            expr = self.or_expr()
            if self.peek() != ")":
                raise self._fail(self.offset(), "unbalanced parentheses: expected ')'")
            self.i += 1
            self.depth -= 1
            return expr
        if val == ")":
            raise self._fail(off, "unbalanced parentheses: unexpected ')'")
        raise self._fail(off, f"dangling operator: expected an operand before {val!r}")


class _ConditionError(Exception):
    def __init__(self, offset: int, message: str):
        self.offset = offset
        self.message = message


@lru_cache(maxsize=4096)
def _parse_condition_cached(text: str) -> ConditionExpr:
    return _ConditionParser(text).parse()


def parse_condition(text: str) -> ConditionExpr:
    """Parse ``or`` < ``and`` < ``not`` < atom; keywords are case-insensitive."""
    try:
        return _parse_condition_cached(text)
    except _ConditionError as exc:
        raise XdlSyntaxError([ParseDiagnostic(1, exc.offset + 1, exc.message)]) from None


def _offset_position(line: int, col: int, text: str, offset: int) -> tuple[int, int]:
    prefix = text[:offset]
    newlines = prefix.count("\n")
    if newlines:
        return line + newlines, offset - prefix.rfind("\n")
    return line, col + offset


# -- documents ----------------------------------------------------------------


def _parse_params(spec: str) -> list[Param]:
    params = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        name, eq, default = part.partition("=")
        name = name.strip()
        if not is_identifier(name):
            raise ValueError(f"invalid parameter name {name!r}")
        params.append(Param(name, default.strip() if eq else None))
    return params


class _Builder:
    def __init__(self, scanner: _Scanner):
        self.sc = scanner

    def error(self, line, col, message):
        self.sc.diagnostics.append(ParseDiagnostic(line, col, message))

    def condition(self, attr) -> Optional[ConditionExpr]:
        _, value, aline, acol, vline, vcol = attr
        try:
            return _parse_condition_cached(value)
        except _ConditionError as exc:
            line, col = _offset_position(vline, vcol, value, exc.offset)
            self.error(line, col, f"malformed condition: {exc.message}")
            return None

    def step(self, elem: _Element) -> Step:
        name = _ALIASES.get(elem.name, elem.name)
        if name == "Blueprint":
            self.error(elem.line, elem.col, "Blueprint is only allowed at top level")
        attrs = []
        condition = None
        for attr in elem.attrs:
            key, value = attr[0], attr[1]
            if key == "condition":
                condition = self.condition(attr)
                continue
            if key == "while_condition":
                self.condition(attr)
            attrs.append((key, value))
        if elem.children and name != "Repeat":
            self.error(elem.line, elem.col, "children only allowed on Repeat")
        children = tuple(self.step(c) for c in elem.children)
        return Step(name, tuple(attrs), condition, children, elem.line, elem.col)

    def blueprint(self, elem: _Element) -> Optional[Blueprint]:
        bid = None
        params: list[Param] = []
        for key, value, aline, acol, _, _ in elem.attrs:
            if key == "id":
                bid = value
            elif key == "params":
                try:
                    params = _parse_params(value)
                except ValueError as exc:
                    self.error(aline, acol, str(exc))
            else:
                self.error(aline, acol, f"unknown Blueprint attribute {key!r}")
        if not bid:
            self.error(elem.line, elem.col, "Blueprint requires a non-empty id")
            return None
        names = [p.name.lower() for p in params]
        if len(set(names)) != len(names):
            self.error(elem.line, elem.col, f"duplicate parameter names in blueprint {bid!r}")
            return None
        steps = tuple(self.step(c) for c in elem.children)
        return Blueprint(bid, tuple(params), steps, elem.line, elem.col)

    def document(self, roots: list[_Element]) -> XdlDocument:
        blueprints: list[Blueprint] = []
        seen: set[str] = set()
        main: list[Step] = []
        for elem in roots:
            if elem.name == "Blueprint":
                bp = self.blueprint(elem)
                if bp is None:
                    continue
                if bp.id in seen:
                    self.error(elem.line, elem.col, f"duplicate blueprint id {bp.id!r}")
                    continue
                seen.add(bp.id)
                blueprints.append(bp)
            else:
                main.append(self.step(elem))
        return XdlDocument(tuple(blueprints), tuple(main))


def parse_document(text: Union[str, bytes]) -> XdlDocument:
    """Parse XDL source; raises :class:`XdlSyntaxError` on any error."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise XdlSyntaxError(
                [ParseDiagnostic(1, 1, f"input is not valid UTF-8 (byte {exc.start})")]
            ) from None
    if text.startswith("\ufeff"):
        text = text[1:]
    scanner = _Scanner(text)
    try:
        roots = scanner.scan()
    except _Abort:
        raise XdlSyntaxError(scanner.diagnostics) from None
    doc = _Builder(scanner).document(roots)
    if scanner.diagnostics:
        raise XdlSyntaxError(sorted(scanner.diagnostics, key=lambda d: (d.line, d.column)))
    return doc


# -- printing -----------------------------------------------------------------


def _prec(expr: ConditionExpr) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def print_condition(expr: ConditionExpr) -> str:
    """Minimal-parenthesis rendering that parses back to the same tree."""
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Literal):
        return "true" if expr.value else "false"
    if isinstance(expr, Not):
        inner = print_condition(expr.operand)
        return f"not ({inner})" if _prec(expr.operand) < 3 else f"not {inner}"
    op, p = ("or", 1) if isinstance(expr, Or) else ("and", 2)
    left = print_condition(expr.left)
    right = print_condition(expr.right)
    if _prec(expr.left) < p:
        left = f"({left})"
    if _prec(expr.right) <= p:
        right = f"({right})"
    return f"{left} {op} {right}"


def _escape(value: str) -> str:
    return (value.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _print_step(step: Step, indent: int, out: list[str]):
    pad = "  " * indent
    attrs = [f'{k}="{_escape(v)}"' for k, v in step.attributes]
    if step.condition is not None:
        attrs.append(f'condition="{_escape(print_condition(step.condition))}"')
    head = " ".join([step.name] + attrs)
    if not step.children:
        out.append(f"{pad}<{head}/>")
        return
    out.append(f"{pad}<{head}>")
    for child in step.children:
        _print_step(child, indent + 1, out)
    out.append(f"{pad}</{step.name}>")


def print_document(doc: XdlDocument, comments: Optional[dict] = None) -> str:
    """Canonical serialization. ``comments`` maps blueprint ids to a
    comment emitted just before that blueprint."""
    out: list[str] = []
    comments = comments or {}
    for bp in doc.blueprints:
        if bp.id in comments:
            for line in comments[bp.id].splitlines():
                out.append(f"<!-- {line.replace('--', '- -')} -->")
        head = f'Blueprint id="{_escape(bp.id)}"'
        if bp.params:
            spec = ", ".join(p.name if p.default is None else f"{p.name}={p.default}"
                             for p in bp.params)
            head += f' params="{_escape(spec)}"'
        if not bp.steps:
            out.append(f"<{head}/>")
            continue
        out.append(f"<{head}>")
        for step in bp.steps:
            _print_step(step, 1, out)
        out.append("</Blueprint>")
    for step in doc.main_steps:
        _print_step(step, 0, out)
    return "\n".join(out) + "\n"
