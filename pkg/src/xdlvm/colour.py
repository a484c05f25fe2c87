"""Discrete colour classes and the binned nearest-reference classifier."""

from __future__ import annotations

import enum
from typing import Mapping, Sequence


class ColourClass(enum.Enum):
    WHITE = "white"
    ORANGE = "orange"
    BLUE = "blue"
    GREEN = "green"
    UNKNOWN = "unknown"

    @property
    def letter(self) -> str:
        return self.value[0].upper()

    def __str__(self):
        return self.value


# Order used for state-vial encodings and colour enumerations.
SYMBOL_COLOURS = (ColourClass.WHITE, ColourClass.ORANGE, ColourClass.BLUE, ColourClass.GREEN)

# Channels sit at the extremes where possible so sigma=15 noise almost never
# crosses a bin edge; every pair of binned references is >= 6 apart in L1.
DEFAULT_PALETTE: dict[ColourClass, tuple[int, int, int]] = {
    ColourClass.WHITE: (255, 255, 255),
    ColourClass.ORANGE: (255, 127, 0),
    ColourClass.BLUE: (0, 0, 255),
    ColourClass.GREEN: (0, 255, 0),
}

N_BINS = 5
BIN_WIDTH = 51
MAX_DISTANCE = 2


def parse_colour_class(name: str) -> ColourClass:
    try:
        return ColourClass(name.strip().lower())
    except ValueError:
        raise ValueError(f"unknown colour {name!r}") from None


def bin_channel(value: float) -> int:
    """0-50, 51-101, 102-152, 153-203 and 204-255 map to bins 0..4."""
    value = min(max(value, 0.0), 255.0)
    return min(int(value // BIN_WIDTH), N_BINS - 1)


def bin_rgb(rgb: Sequence[float]) -> tuple[int, int, int]:
    return tuple(bin_channel(v) for v in rgb)


def classify_rgb(rgb: Sequence[float], palette: Mapping[ColourClass, Sequence[int]] = None
                 ) -> ColourClass:
    palette = DEFAULT_PALETTE if palette is None else palette
    binned = bin_rgb(rgb)
    distances = {
        cls: sum(abs(a - b) for a, b in zip(binned, bin_rgb(ref)))
        for cls, ref in palette.items()
    }
    best = min(distances.values())
    winners = [c for c, d in distances.items() if d == best]
    if len(winners) != 1 or best > MAX_DISTANCE:
        return ColourClass.UNKNOWN
    return winners[0]
