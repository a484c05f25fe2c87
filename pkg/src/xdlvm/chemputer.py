"""Deterministic model of the liquid-handling platform and its camera.

Volumes are held internally as integer microlitres so that any sequence
of transfers conserves volume exactly. Pumps and valves are not modelled:
any vessel may transfer to any other.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional, Union

import numpy as np

from .colour import (
    DEFAULT_PALETTE,
    SYMBOL_COLOURS,
    ColourClass,
    classify_rgb,
    parse_colour_class,
)
from .errors import (
    CapacityExceeded,
    ConfigError,
    InsufficientVolume,
    InvalidTransfer,
    MissingReading,
    UnknownVessel,
)

ROLES = ("tape", "head", "state", "stock", "waste", "reactor", "generic")
INDEXED_ROLES = ("tape", "head", "state")
VIAL_CAPACITY_ML = 10
FILL_ML = 5

Volume = Union[int, float, str, Decimal]


def to_microlitres(volume_ml: Volume) -> int:
    """Exact mL -> integer uL conversion; sub-microlitre precision is rejected."""
    try:
        ul = Decimal(str(volume_ml).strip()) * 1000
    except InvalidOperation:
        raise ValueError(f"not a volume: {volume_ml!r}") from None
    if not ul.is_finite() or ul != ul.to_integral_value():
        raise ValueError(f"volume {volume_ml!r} is not a whole number of microlitres")
    return int(ul)


def to_millilitres(ul: int) -> float:
    return ul / 1000


@dataclass(frozen=True)
class LiquidSample:
    reagent: str
    volume_ul: int
    rgb: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "rgb", tuple(int(c) for c in self.rgb))
        if self.volume_ul <= 0:
            raise ValueError("sample volume must be positive")
        if len(self.rgb) != 3 or not all(0 <= c <= 255 for c in self.rgb):
            raise ValueError(f"rgb components must lie in [0, 255]: {self.rgb}")

    @classmethod
    def of_ml(cls, reagent: str, volume_ml: Volume, rgb) -> "LiquidSample":
        return cls(reagent, to_microlitres(volume_ml), tuple(rgb))

    @property
    def volume_ml(self) -> float:
        return to_millilitres(self.volume_ul)


def _round_div(num: int, den: int) -> int:
    # round half up, exact for non-negative integers
    return (2 * num + den) // (2 * den)


def merge_samples(samples: Iterable[LiquidSample]) -> LiquidSample:
    """Volume-weighted rgb mean, rounded per channel; reagent becomes
    ``mixture`` unless every part is the same reagent with the same rgb."""
    samples = list(samples)
    if len(samples) == 1:
        return samples[0]
    total = sum(s.volume_ul for s in samples)
    rgb = tuple(_round_div(sum(s.rgb[i] * s.volume_ul for s in samples), total)
                for i in range(3))
    same = len({(s.reagent, s.rgb) for s in samples}) == 1
    return LiquidSample(samples[0].reagent if same else "mixture", total, rgb)


@dataclass
class Vessel:
    id: str
    role: str = "generic"
    index: Optional[int] = None
    capacity_ul: Optional[int] = VIAL_CAPACITY_ML * 1000
    contents: list[LiquidSample] = field(default_factory=list)
    colour: Optional[ColourClass] = None
    readings: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ConfigError("vessel id must be non-empty")
        if self.role not in ROLES:
            raise ConfigError(f"vessel {self.id}: unknown role {self.role!r}")
        if self.role in INDEXED_ROLES and (self.index is None or self.index < 1):
            raise ConfigError(f"vessel {self.id}: role {self.role} needs an index >= 1")
        if self.role == "stock" and self.colour is None:
            raise ConfigError(f"vessel {self.id}: stock needs a colour")
        if self.capacity_ul is not None and self.capacity_ul <= 0:
            raise ConfigError(f"vessel {self.id}: capacity must be positive")
        if (self.role != "stock" and self.capacity_ul is not None
                and self.volume_ul > self.capacity_ul):
            raise ConfigError(f"vessel {self.id}: contents exceed capacity")

    @property
    def volume_ul(self) -> int:
        return sum(s.volume_ul for s in self.contents)

    @property
    def volume_ml(self) -> float:
        return to_millilitres(self.volume_ul)

    @property
    def is_stock(self) -> bool:
        return self.role == "stock"

    def mixture(self) -> Optional[LiquidSample]:
        return merge_samples(self.contents) if self.contents else None


@dataclass
class Platform:
    vessels: dict[str, Vessel]
    camera_noise_sigma: float = 0.0
    rng_seed: int = 0
    palette: dict[ColourClass, tuple[int, int, int]] = field(
        default_factory=lambda: dict(DEFAULT_PALETTE))
    observation_counter: int = 0
    dispensed_ul: int = 0
    added_ul: int = 0

    def __post_init__(self):
        if self.camera_noise_sigma < 0:
            raise ConfigError("camera sigma must be >= 0")
        seen_roles = set()
        wastes = 0
        for vid, v in self.vessels.items():
            if vid != v.id:
                raise ConfigError(f"vessel key {vid!r} does not match id {v.id!r}")
            if v.role in INDEXED_ROLES:
                key = (v.role, v.index)
            elif v.role == "stock":
                key = ("stock", v.colour)
            else:
                key = None
            if key is not None:
                if key in seen_roles:
                    raise ConfigError(f"duplicate role assignment {key}")
                seen_roles.add(key)
            wastes += v.role == "waste"
        if wastes != 1:
            raise ConfigError(f"platform needs exactly one waste vessel, found {wastes}")

    # -- lookup -----------------------------------------------------------

    def vessel(self, vessel_id: str) -> Vessel:
        try:
            return self.vessels[vessel_id]
        except KeyError:
            raise UnknownVessel(vessel_id) from None

    def by_role(self, role: str) -> list[Vessel]:
        found = [v for v in self.vessels.values() if v.role == role]
        return sorted(found, key=lambda v: (v.index or 0, v.id))

    def stock_for(self, colour: ColourClass) -> Vessel:
        for v in self.vessels.values():
            if v.role == "stock" and v.colour is colour:
                return v
        raise UnknownVessel(f"stock_{colour.value}")

    def copy(self) -> "Platform":
        return copy.deepcopy(self)

    # -- liquid handling --------------------------------------------------

    def _stock_sample(self, stock: Vessel, volume_ul: int) -> LiquidSample:
        if stock.contents:
            ref = stock.mixture()
            return LiquidSample(ref.reagent, volume_ul, ref.rgb)
        return LiquidSample(f"{stock.colour.value}_dye", volume_ul, self.palette[stock.colour])

    def transfer(self, src: str, dst: str, volume_ml: Union[Volume, None] = None,
                 volume_ul: Optional[int] = None) -> "Platform":
        """Move liquid from ``src`` to ``dst``; ``volume_ml="all"`` empties ``src``.

        Stocks are infinite sources and meter what they dispense. All
        checks happen before anything is mutated.
        """
        source = self.vessel(src)
        target = self.vessel(dst)
        if source is target:
            raise InvalidTransfer(f"cannot transfer {src} into itself")
        if target.is_stock:
            raise InvalidTransfer(f"stock {dst} cannot receive liquid")
        if volume_ul is None:
            if isinstance(volume_ml, str) and volume_ml.strip().lower() == "all":
                if source.is_stock:
                    raise InvalidTransfer("cannot transfer 'all' from an infinite stock")
                amount = source.volume_ul
                if amount == 0:
                    raise InsufficientVolume(f"{src} is empty")
            else:
                amount = to_microlitres(volume_ml)
        else:
            amount = int(volume_ul)
        if amount <= 0:
            raise InvalidTransfer("transfer volume must be positive")
        if not source.is_stock and source.volume_ul < amount:
            raise InsufficientVolume(
                f"{src} holds {source.volume_ml} mL, {amount / 1000} mL requested")
        if target.capacity_ul is not None and target.capacity_ul - target.volume_ul < amount:
            raise CapacityExceeded(
                f"{dst} has {(target.capacity_ul - target.volume_ul) / 1000} mL free, "
                f"{amount / 1000} mL requested")

        if source.is_stock:
            moved = self._stock_sample(source, amount)
            self.dispensed_ul += amount
        else:
            mixed = source.mixture()
            moved = LiquidSample(mixed.reagent, amount, mixed.rgb)
            left = mixed.volume_ul - amount
            source.contents = [LiquidSample(mixed.reagent, left, mixed.rgb)] if left else []
        target.contents = [merge_samples(target.contents + [moved])]
        return self

    def add(self, vessel_id: str, sample: LiquidSample) -> "Platform":
        """Deposit an external reagent (not drawn from a modelled stock)."""
        target = self.vessel(vessel_id)
        if target.is_stock:
            raise InvalidTransfer(f"stock {vessel_id} cannot receive liquid")
        if (target.capacity_ul is not None
                and target.capacity_ul - target.volume_ul < sample.volume_ul):
            raise CapacityExceeded(f"{vessel_id} cannot hold another {sample.volume_ml} mL")
        target.contents = [merge_samples(target.contents + [sample])]
        self.added_ul += sample.volume_ul
        return self

    def set_contents(self, vessel_id: str, samples: Iterable[LiquidSample]) -> "Platform":
        self.vessel(vessel_id).contents = list(samples)
        return self

    def liquid_total_ul(self) -> int:
        """Volume held by every non-stock vessel, waste included."""
        return sum(v.volume_ul for v in self.vessels.values() if not v.is_stock)

    # -- sensing ----------------------------------------------------------

    def true_colour(self, vessel_id: str) -> ColourClass:
        """Noise-free classification; does not touch the observation counter."""
        mixed = self.vessel(vessel_id).mixture()
        if mixed is None:
            return ColourClass.WHITE
        return classify_rgb(mixed.rgb, self.palette)

    def observe_colour(self, vessel_id: str) -> ColourClass:
        """Camera reading with seeded Gaussian noise.

        The noise for observation ``k`` depends only on ``(rng_seed, k)``
        so runs replay exactly.
        """
        mixed = self.vessel(vessel_id).mixture()
        k = self.observation_counter
        self.observation_counter += 1
        if mixed is None:
            return ColourClass.WHITE
        rgb = np.asarray(mixed.rgb, dtype=float)
        if self.camera_noise_sigma > 0:
            rng = np.random.default_rng([self.rng_seed % 2**64, k])
            rgb = np.clip(rgb + rng.normal(0.0, self.camera_noise_sigma, 3), 0, 255)
        return classify_rgb(rgb, self.palette)

    def reading(self, vessel_id: str, quantity: str) -> float:
        v = self.vessel(vessel_id)
        if quantity == "volume":
            return v.volume_ml
        try:
            return float(v.readings[quantity])
        except KeyError:
            raise MissingReading(f"vessel {vessel_id} has no {quantity} reading") from None

    def snapshot(self) -> dict[str, tuple[ColourClass, float]]:
        return {vid: (self.true_colour(vid), v.volume_ml) for vid, v in self.vessels.items()}


def transfer(p: Platform, src: str, dst: str, volume_ml: Volume) -> Platform:
    return p.transfer(src, dst, volume_ml)


def observe_colour(p: Platform, vessel_id: str) -> ColourClass:
    return p.observe_colour(vessel_id)


def observation_space_size(head_positions: int, rois: int, classes: int) -> int:
    """Distinct camera observations per step: head position times class^ROI."""
    for name, n in (("head_positions", head_positions), ("rois", rois), ("classes", classes)):
        if not isinstance(n, int) or n < 1:
            raise ValueError(f"{name} must be an integer >= 1, got {n!r}")
    return head_positions * classes ** rois


def standard_platform(tape_len: int, head_len: int, state_vials: int = 2) -> Platform:
    if tape_len < 1 or head_len < 1 or state_vials < 1:
        raise ValueError("vial counts must be >= 1")
    if tape_len != head_len:
        raise ValueError(f"tape_len ({tape_len}) must equal head_len ({head_len})")
    vessels = []
    vessels += [Vessel(f"head_{i}", "head", i) for i in range(1, head_len + 1)]
    vessels += [Vessel(f"tape_{i}", "tape", i) for i in range(1, tape_len + 1)]
    vessels += [Vessel(f"state_{i}", "state", i) for i in range(1, state_vials + 1)]
    for colour in SYMBOL_COLOURS[1:]:
        vessels.append(Vessel(f"stock_{colour.value}", "stock", capacity_ul=None, colour=colour))
    vessels.append(Vessel("waste", "waste", capacity_ul=None))
    return Platform({v.id: v for v in vessels})


# -- config files -------------------------------------------------------------

_CAMERA_KEYS = {"sigma", "seed", "palette"}
_VESSEL_KEYS = {"id", "role", "index", "colour", "capacity_ml", "contents", "readings"}
_SAMPLE_KEYS = {"reagent", "volume_ml", "rgb"}


def _reject_unknown(obj: dict, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def platform_from_dict(data: dict) -> Platform:
    _reject_unknown(data, {"camera", "vessels"}, "platform")
    camera = data.get("camera", {})
    _reject_unknown(camera, _CAMERA_KEYS, "camera")
    palette = dict(DEFAULT_PALETTE)
    for name, rgb in camera.get("palette", {}).items():
        try:
            palette[parse_colour_class(name)] = tuple(int(c) for c in rgb)
        except ValueError as exc:
            raise ConfigError(f"camera.palette: {exc}") from None
    vessels = {}
    for i, raw in enumerate(data.get("vessels", [])):
        where = f"vessels[{i}]"
        _reject_unknown(raw, _VESSEL_KEYS, where)
        if "id" not in raw or "role" not in raw:
            raise ConfigError(f"{where}: 'id' and 'role' are required")
        contents = []
        for j, s in enumerate(raw.get("contents", [])):
            _reject_unknown(s, _SAMPLE_KEYS, f"{where}.contents[{j}]")
            try:
                contents.append(LiquidSample.of_ml(s["reagent"], s["volume_ml"], s["rgb"]))
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"{where}.contents[{j}]: {exc}") from None
        role = raw["role"]
        default_cap = None if role in ("stock", "waste") else VIAL_CAPACITY_ML
        cap = raw.get("capacity_ml", default_cap)
        try:
            colour = parse_colour_class(raw["colour"]) if "colour" in raw else None
            v = Vessel(
                id=raw["id"],
                role=role,
                index=raw.get("index"),
                capacity_ul=None if cap is None else to_microlitres(cap),
                contents=contents,
                colour=colour,
                readings={k.lower(): float(x) for k, x in raw.get("readings", {}).items()},
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if v.id in vessels:
            raise ConfigError(f"{where}: duplicate vessel id {v.id!r}")
        vessels[v.id] = v
    return Platform(
        vessels,
        camera_noise_sigma=float(camera.get("sigma", 0.0)),
        rng_seed=int(camera.get("seed", 0)),
        palette=palette,
    )


def platform_to_dict(p: Platform) -> dict:
    out_vessels = []
    for v in p.vessels.values():
        entry: dict = {"id": v.id, "role": v.role}
        if v.index is not None:
            entry["index"] = v.index
        if v.colour is not None:
            entry["colour"] = v.colour.value
        entry["capacity_ml"] = None if v.capacity_ul is None else to_millilitres(v.capacity_ul)
        entry["contents"] = [
            {"reagent": s.reagent, "volume_ml": s.volume_ml, "rgb": list(s.rgb)}
            for s in v.contents
        ]
        if v.readings:
            entry["readings"] = dict(v.readings)
        out_vessels.append(entry)
    camera: dict = {"sigma": p.camera_noise_sigma, "seed": p.rng_seed}
    if p.palette != DEFAULT_PALETTE:
        camera["palette"] = {c.value: list(rgb) for c, rgb in p.palette.items()}
    return {"camera": camera, "vessels": out_vessels}


def load_platform(path) -> Platform:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return platform_from_dict(data)


def save_platform(p: Platform, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(platform_to_dict(p), fh, indent=2)
        fh.write("\n")
