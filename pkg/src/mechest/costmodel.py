"""Per-category cost profiles and the linear energy/time estimator.

A profile assigns each instruction category a specific time ``t_c``
(seconds per instruction) and specific energy ``e_c`` (joules per
instruction).  The estimate for a run with counts ``n_c`` is the
bilinear sum over categories, accumulated in Category declaration order
so results are bit-reproducible.

Profile files store nanoseconds / nanojoules; conversion to SI units is
done with exact decimal arithmetic so that save/load round-trips are
lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from decimal import Decimal, localcontext
from importlib import resources
from pathlib import Path
from typing import Mapping, Union

from .errors import NegativeCost, SchemaError
from .isa import Category
from .simulator import CategoryCounts

Override = Union[bool, str]  # False, True (manually adapted) or "pending"

_NANO = Decimal(10) ** 9


def _from_nano(value) -> float:
    with localcontext() as ctx:
        ctx.prec = 200
        return float(Decimal(value) / _NANO)


def _to_nano(value: float):
    """Shortest decimal (in nano units) that converts back to ``value`` exactly."""
    with localcontext() as ctx:
        ctx.prec = 200
        exact = Decimal(value) * _NANO
        for digits in range(1, 60):
            cand = Decimal(format(exact, f".{digits}g"))
            if _from_nano(cand) == value:
                break
        else:
            cand = exact
    f = float(cand)
    if Decimal(repr(f)) == cand:
        return int(f) if f.is_integer() and abs(f) < 2**53 else f
    return cand  # emitted verbatim by dumps()


@dataclass(frozen=True)
class CategoryCost:
    time: float    # seconds per instruction
    energy: float  # joules per instruction
    overridden: Override = False


@dataclass(frozen=True)
class CostProfile:
    costs: Mapping[Category, CategoryCost]
    platform: str = "unnamed"
    hardware_config: str | None = None
    provenance: str = ""

    def __post_init__(self):
        missing = [c.name for c in Category if c not in self.costs]
        if missing:
            raise SchemaError("categories", "missing " + ", ".join(missing))
        for cat in Category:
            cost = self.costs[cat]
            if cost.overridden == "pending":
                continue
            if cost.time < 0 or cost.energy < 0:
                raise NegativeCost(cat)

    def __getitem__(self, cat: Category) -> CategoryCost:
        return self.costs[cat]

    def time(self, cat: Category) -> float:
        return self.costs[cat].time

    def energy(self, cat: Category) -> float:
        return self.costs[cat].energy

    @property
    def pending(self) -> list[Category]:
        return [c for c in Category if self.costs[c].overridden == "pending"]

    def with_cost(self, cat: Category, time: float | None = None, energy: float | None = None,
                  overridden: Override = True) -> "CostProfile":
        """Return a copy with one category manually adapted."""
        old = self.costs[cat]
        costs = dict(self.costs)
        costs[cat] = CategoryCost(
            old.time if time is None else time,
            old.energy if energy is None else energy,
            overridden,
        )
        return replace(self, costs=costs)

    @classmethod
    def from_table(cls, rows: Mapping[Category, tuple[float, float]], **meta) -> "CostProfile":
        """Build from ``{category: (t_ns, e_nJ)}``."""
        return cls({c: CategoryCost(_from_nano(t), _from_nano(e)) for c, (t, e) in rows.items()}, **meta)

    # -- serialisation ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "platform": self.platform,
            "hardware_config": self.hardware_config,
            "provenance": self.provenance,
            "categories": [
                {
                    "name": c.name,
                    "t_ns": _to_nano(self.costs[c].time),
                    "e_nJ": _to_nano(self.costs[c].energy),
                    "overridden": self.costs[c].overridden,
                }
                for c in Category
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CostProfile":
        if not isinstance(obj, Mapping):
            raise SchemaError("<root>", "expected a JSON object")
        for key in ("platform", "categories"):
            if key not in obj:
                raise SchemaError(key, "missing")
        cats = obj["categories"]
        if not isinstance(cats, list):
            raise SchemaError("categories", "expected an array")
        costs: dict[Category, CategoryCost] = {}
        for i, entry in enumerate(cats):
            where = f"categories[{i}]"
            if not isinstance(entry, Mapping):
                raise SchemaError(where, "expected an object")
            for key in ("name", "t_ns", "e_nJ"):
                if key not in entry:
                    raise SchemaError(f"{where}.{key}", "missing")
            try:
                cat = Category.parse(entry["name"])
            except ValueError as exc:
                raise SchemaError(f"{where}.name", str(exc)) from None
            if cat in costs:
                raise SchemaError(f"{where}.name", f"duplicate category {cat.name}")
            for key in ("t_ns", "e_nJ"):
                if isinstance(entry[key], bool) or not isinstance(entry[key], (int, float, Decimal)):
                    raise SchemaError(f"{where}.{key}", "expected a number")
            overridden = entry.get("overridden", False)
            if overridden not in (True, False, "pending"):
                raise SchemaError(f"{where}.overridden", "expected true, false or \"pending\"")
            costs[cat] = CategoryCost(_from_nano(entry["t_ns"]), _from_nano(entry["e_nJ"]), overridden)
        return cls(
            costs,
            platform=str(obj["platform"]),
            hardware_config=obj.get("hardware_config"),
            provenance=str(obj.get("provenance", "")),
        )

    def dumps(self) -> str:
        obj = self.to_json()
        exact = {}
        for entry in obj["categories"]:
            for key in ("t_ns", "e_nJ"):
                if isinstance(entry[key], Decimal):
                    tag = f"@exact{len(exact)}@"
                    exact[f'"{tag}"'] = format(entry[key], "f")
                    entry[key] = tag
        text = json.dumps(obj, indent=2)
        for tag, digits in exact.items():
            text = text.replace(tag, digits)
        return text + "\n"

    @classmethod
    def loads(cls, text: str) -> "CostProfile":
        try:
            obj = json.loads(text, parse_float=Decimal)
        except json.JSONDecodeError as exc:
            raise SchemaError("<root>", f"invalid JSON: {exc}") from None
        return cls.from_json(obj)


def load_profile(path: str | Path) -> CostProfile:
    return CostProfile.loads(Path(path).read_text())


def save_profile(profile: CostProfile, path: str | Path) -> None:
    Path(path).write_text(profile.dumps())


def default_profile() -> CostProfile:
    """The shipped LEON3 profile (nine categories, FPU configuration)."""
    text = resources.files("mechest.data").joinpath("leon3.json").read_text()
    return CostProfile.loads(text)


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    energy: float
    time: float
    contributions: Mapping[Category, tuple[float, float]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "energy_J": self.energy,
            "time_s": self.time,
            "contributions": {c.name: {"energy_J": e, "time_s": t}
                              for c, (e, t) in self.contributions.items()},
        }


def estimate(counts: CategoryCounts, profile: CostProfile) -> Estimate:
    """Energy and time of a run: sums of per-category cost times count."""
    for cat in profile.pending:
        cost = profile.costs[cat]
        if cost.time < 0 or cost.energy < 0:
            raise NegativeCost(cat)
    energy = 0.0
    time = 0.0
    contributions = {}
    for cat in Category:
        n = counts[cat]
        cost = profile.costs[cat]
        e_c = cost.energy * n
        t_c = cost.time * n
        contributions[cat] = (e_c, t_c)
        energy += e_c
        time += t_c
    return Estimate(energy, time, contributions)


def format_estimate(est: Estimate, counts: CategoryCounts | None = None) -> str:
    lines = [f"{'category':<18} {'count':>14} {'energy [nJ]':>18} {'time [ns]':>18}"]
    for cat in Category:
        e, t = est.contributions.get(cat, (0.0, 0.0))
        n = counts[cat] if counts is not None else ""
        lines.append(f"{cat.name:<18} {n:>14} {e * 1e9:>18.3f} {t * 1e9:>18.3f}")
    lines.append(f"{'total':<18} {counts.total() if counts is not None else '':>14} "
                 f"{est.energy * 1e9:>18.3f} {est.time * 1e9:>18.3f}")
    lines.append(f"estimated energy: {est.energy:.9g} J")
    lines.append(f"estimated time:   {est.time:.9g} s")
    return "\n".join(lines)
