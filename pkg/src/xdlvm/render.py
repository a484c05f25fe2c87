"""Row-per-iteration rendering of Turing machine traces.

Rows are keyed off ``ResetVariables`` events, which open every
Transition iteration and carry a vessel snapshot. Vials are recognised
by their ``head_<i>``, ``tape_<i>`` and ``state_<j>`` ids.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib
from matplotlib.figure import Figure
from matplotlib.patches import Circle

from .colour import DEFAULT_PALETTE, ColourClass
from .runtime import TraceEvent

SVG_RC = {
    "svg.hashsalt": "xdlvm",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 9,
}

_UNKNOWN_FACE = "#9a9a9a"


class NoTransitions(ValueError):
    pass


@dataclass(frozen=True)
class Row:
    tape: tuple[ColourClass, ...]
    head: Optional[int]  # 1-based, None when no or several head vials are filled
    heads: tuple[ColourClass, ...]
    state: tuple[ColourClass, ...]
    label: str

    @property
    def cells(self) -> str:
        return "".join(c.letter for c in self.tape)


def _numbered(snapshot, prefix):
    found = [(int(k[len(prefix):]), k) for k in snapshot
             if k.startswith(prefix) and k[len(prefix):].isdigit()]
    return [snapshot[k][0] for _, k in sorted(found)]


def _legend(attrs: dict) -> dict[str, str]:
    names = {}
    for item in attrs.get("states", "").split():
        name, _, code = item.partition("=")
        if code:
            names[code] = name
    return names


def trace_rows(trace: Sequence[TraceEvent]) -> list[Row]:
    rows = []
    for event in trace:
        if (event.step_name != "ResetVariables" or not event.executed
                or event.vessel_snapshot is None):
            continue
        snap = event.vessel_snapshot
        tape = tuple(_numbered(snap, "tape_"))
        heads = tuple(_numbered(snap, "head_"))
        state = tuple(_numbered(snap, "state_"))
        filled = [i for i, c in enumerate(heads, start=1) if c is not ColourClass.WHITE]
        code = "".join(c.letter for c in state)
        label = _legend(event.attributes).get(code, code or "?")
        rows.append(Row(tape, filled[0] if len(filled) == 1 else None, heads, state, label))
    if not rows:
        raise NoTransitions("no transitions found")
    return rows


def render_ascii(trace: Sequence[TraceEvent]) -> str:
    """One line per iteration: index, tape letters with ``[ ]`` at the head, state."""
    rows = trace_rows(trace)
    width = max(len(r.tape) for r in rows) + 2
    lines = [f"{'step':>4}  {'tape':<{width}}  state"]
    for i, row in enumerate(rows):
        cells = row.cells
        if row.head is not None:
            k = row.head - 1
            cells = f"{cells[:k]}[{cells[k]}]{cells[k + 1:]}"
        lines.append(f"{i:>4}  {cells:<{width}}  {row.label}")
    return "\n".join(lines) + "\n"


def _face(colour: ColourClass) -> str:
    if colour is ColourClass.UNKNOWN:
        return _UNKNOWN_FACE
    r, g, b = DEFAULT_PALETTE[colour]
    return f"#{r:02x}{g:02x}{b:02x}"


def vial_grid_figure(rows: Sequence[Row]) -> Figure:
    """Head row above tape row, state vials to the right; one band per iteration."""
    n = max(len(r.tape) for r in rows)
    band = 2.6
    fig = Figure(figsize=(0.45 * (n + 5), 0.5 * band * len(rows) + 0.6))
    ax = fig.add_axes([0.0, 0.0, 1.0, 1.0])
    ax.set_xlim(-2.2, n + 3.2)
    ax.set_ylim(-band * len(rows) - 0.2, 0.6)
    ax.set_aspect("equal")
    ax.axis("off")
    for k, row in enumerate(rows):
        y_head = -band * k
        y_tape = y_head - 1.1
        ax.text(-1.9, y_tape + 0.55, str(k), va="center", ha="left")
        for i, colour in enumerate(row.heads):
            ax.add_patch(Circle((i, y_head), 0.42, facecolor=_face(colour),
                                edgecolor="#444444", linewidth=0.6))
        for i, colour in enumerate(row.tape):
            ax.add_patch(Circle((i, y_tape), 0.42, facecolor=_face(colour),
                                edgecolor="#444444", linewidth=0.6))
        for j, colour in enumerate(row.state):
            ax.add_patch(Circle((n + 0.6 + j, y_tape), 0.42, facecolor=_face(colour),
                                edgecolor="#222222", linewidth=0.9))
        ax.text(n + 1.1, y_head, row.label, va="center", ha="center")
    return fig


def render_svg(trace: Sequence[TraceEvent]) -> str:
    rows = trace_rows(trace)
    with matplotlib.rc_context(SVG_RC):
        fig = vial_grid_figure(rows)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()
