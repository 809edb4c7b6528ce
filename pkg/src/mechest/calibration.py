"""Derive a cost profile from reference/test kernel measurements.

Each category is calibrated with a pair of kernels that share identical
loop scaffolding.  The test kernel additionally repeats one instruction
of the category ``body_repeat`` times per iteration, so the measured
difference divided by ``loop_count * body_repeat`` is the specific
energy (or time) of that instruction.

Measurements come from a :class:`MeasurementSource`.  Two are provided:
:class:`SyntheticPlatform` prices simulated category counts with a known
profile plus optional per-instruction jitter, and :class:`CsvImport`
replays measurements taken elsewhere, keyed by kernel content hash.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .assembler import BinaryImage, SourceUnit, assemble, parse
from .costmodel import CategoryCost, CostProfile, estimate
from .errors import (
    IncompleteCoverage,
    MeasurementUnavailable,
    NegativeDelta,
    UnsupportedCategory,
)
from .isa import Category, Instruction
from .simulator import CategoryCounts, HardwareConfig, run

STANDARD_LOOP_COUNT = 1_000_000
STANDARD_BODY_REPEAT = 50

# One instruction per category.  ``{i}`` is the repetition index and
# ``{off}`` a byte offset into the pre-initialised word buffer.
TEMPLATES: dict[Category, str] = {
    Category.IntegerArithmetic: "ADD r3, r4, r5",
    Category.Jump: "BEQ r0, r0, 1",  # always taken, lands on the next instruction
    Category.MemoryLoad: "LD r3, {off}(r6)",
    Category.MemoryStore: "ST r4, {off}(r6)",
    Category.Nop: "NOP",
    Category.Other: "MOV r3, r4",
    Category.FpuArithmetic: "FADD.D f1, f2, f3",
    Category.FpuDivide: "FDIV.D f1, f2, f3",
    Category.FpuSqrt: "FSQRT.D f1, f2",
}


@dataclass(frozen=True)
class KernelPairSpec:
    category: Category
    body_instruction: str
    body_repeat: int = STANDARD_BODY_REPEAT
    loop_count: int = STANDARD_LOOP_COUNT

    def __post_init__(self):
        if self.body_repeat < 1:
            raise ValueError("body_repeat must be at least 1")
        if self.loop_count < 1:
            raise ValueError("loop_count must be at least 1")
        if self.loop_count >= 2**31:
            raise ValueError("loop_count must fit a signed 32-bit register")
        if "{off}" in self.body_instruction and self.body_repeat * 4 > 0x7FFF:
            raise ValueError("body_repeat too large for 16-bit buffer offsets")

    @property
    def n_test(self) -> int:
        return self.loop_count * self.body_repeat

    @classmethod
    def standard(cls, category: Category, body_repeat: int = STANDARD_BODY_REPEAT,
                 loop_count: int = STANDARD_LOOP_COUNT) -> "KernelPairSpec":
        if category not in TEMPLATES:
            raise UnsupportedCategory(category)
        return cls(category, TEMPLATES[category], body_repeat, loop_count)


def standard_specs(body_repeat: int = STANDARD_BODY_REPEAT,
                   loop_count: int = STANDARD_LOOP_COUNT) -> dict[Category, KernelPairSpec]:
    return {c: KernelPairSpec.standard(c, body_repeat, loop_count) for c in Category}


@dataclass(frozen=True)
class KernelPair:
    reference: SourceUnit
    test: SourceUnit
    spec: KernelPairSpec

    def images(self) -> tuple[BinaryImage, BinaryImage]:
        return assemble(self.reference), assemble(self.test)


def _kernel_text(spec: KernelPairSpec, body: list[str], name: str) -> str:
    uses_fp = spec.category in (Category.FpuArithmetic, Category.FpuDivide, Category.FpuSqrt)
    lines = [
        f"; {name} kernel: {spec.category.name}, {spec.loop_count} iterations",
        ".text",
        ".entry main",
        "main:",
        "    LA r6, cal_buffer",
    ]
    if uses_fp:
        lines += ["    LA r7, cal_fconst", "    FLD f2, 0(r7)", "    FLD f3, 8(r7)"]
    lines += [
        "    ADDI r4, r0, 7",
        "    ADDI r5, r0, 3",
        f"    LI r2, {spec.loop_count}",
        "    ADDI r1, r0, 0",
        "cal_loop:",
        *("    " + b for b in body),
        "    ADDI r1, r1, 1",
        "    BLT r1, r2, cal_loop",
        "    HALT",
        ".data",
        "cal_buffer:",
    ]
    words = [str((k * 2654435761) & 0x7FFFFFFF) for k in range(spec.body_repeat)]
    for k in range(0, len(words), 8):
        lines.append("    .word " + ", ".join(words[k:k + 8]))
    if uses_fp:
        lines += [".align 8", "cal_fconst:", "    .double 2.25, 1.5"]
    return "\n".join(lines) + "\n"


def gen_kernel_pair(spec: KernelPairSpec) -> KernelPair:
    body = [spec.body_instruction.format(i=i, off=4 * i) for i in range(spec.body_repeat)]
    first = parse(body[0] + "\n", "<template>").lines[0].statement
    mnemonic = first.split(None, 1)[0]
    try:
        cat = Instruction(mnemonic).category
    except Exception as exc:
        raise UnsupportedCategory(spec.category) from exc
    if cat != spec.category:
        raise UnsupportedCategory(spec.category)
    reference = parse(_kernel_text(spec, [], "reference"), f"ref-{spec.category.name}")
    test = parse(_kernel_text(spec, body, "test"), f"test-{spec.category.name}")
    return KernelPair(reference, test, spec)


# ---------------------------------------------------------------------------
# measurement sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementSample:
    energy: float  # joules
    time: float    # seconds

    def __post_init__(self):
        if not (self.energy >= 0 and self.time >= 0):
            raise ValueError("measured energy and time must be non-negative")


class MeasurementSource(Protocol):
    def measure(self, img: BinaryImage) -> MeasurementSample: ...


def _jitter_sum(rng: np.random.Generator, n: int, sigma: float) -> float:
    """Sum of ``n`` independent U[1-sigma, 1+sigma] factors."""
    if n <= 4096:
        return float(rng.uniform(1.0 - sigma, 1.0 + sigma, n).sum())
    # central limit: mean n, variance n*sigma^2/3, clipped to the support
    s = rng.normal(n, math.sqrt(n / 3.0) * sigma)
    return float(min(max(s, n * (1.0 - sigma)), n * (1.0 + sigma)))


class SyntheticPlatform:
    """Simulated hardware whose true per-instruction costs are known.

    With ``sigma == 0`` a measurement is exactly the estimate of the run's
    counts under ``ground_truth``.  Otherwise every executed instruction's
    energy and time are scaled by independent uniform factors in
    ``[1 - sigma, 1 + sigma]``; the random stream is derived from
    ``(seed, image hash)`` so repeated measurements of a kernel agree and
    concurrent calls need no shared state.
    """

    def __init__(self, ground_truth: CostProfile, sigma: float = 0.0, seed: int = 0,
                 config: HardwareConfig | None = None, budget: int = 2**40):
        if not 0.0 <= sigma < 1.0:
            raise ValueError("sigma must lie in [0, 1)")
        self.ground_truth = ground_truth
        self.sigma = float(sigma)
        self.seed = int(seed)
        self.config = config or HardwareConfig("synthetic", fpu_present=True)
        self.budget = budget

    def counts(self, img: BinaryImage) -> CategoryCounts:
        return run(img, self.config, budget=self.budget).counts

    def measure(self, img: BinaryImage) -> MeasurementSample:
        return self.measure_counts(self.counts(img), img.content_hash())

    def measure_counts(self, counts: CategoryCounts, key: str = "") -> MeasurementSample:
        if self.sigma == 0.0:
            est = estimate(counts, self.ground_truth)
            return MeasurementSample(est.energy, est.time)
        digest = hashlib.sha256(key.encode()).digest()
        ss = np.random.SeedSequence([self.seed, int.from_bytes(digest[:8], "big")])
        rng_e, rng_t = (np.random.default_rng(s) for s in ss.spawn(2))
        energy = 0.0
        time = 0.0
        for cat in Category:
            n = counts[cat]
            if n == 0:
                continue
            cost = self.ground_truth[cat]
            energy += cost.energy * _jitter_sum(rng_e, n, self.sigma)
            time += cost.time * _jitter_sum(rng_t, n, self.sigma)
        return MeasurementSample(energy, time)


class CsvImport:
    """Measurements recorded externally; columns kernel_hash, energy_J, time_s."""

    COLUMNS = ("kernel_hash", "energy_J", "time_s")

    def __init__(self, table: Mapping[str, MeasurementSample]):
        self.table = dict(table)

    @classmethod
    def load(cls, path: str | Path) -> "CsvImport":
        table = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in cls.COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise ValueError(f"{path}: missing CSV columns {', '.join(missing)}")
            for row in reader:
                table[row["kernel_hash"].strip()] = MeasurementSample(
                    float(row["energy_J"]), float(row["time_s"]))
        return cls(table)

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for key, s in self.table.items():
                w.writerow([key, repr(s.energy), repr(s.time)])

    def measure(self, img: BinaryImage) -> MeasurementSample:
        key = img.content_hash()
        try:
            return self.table[key]
        except KeyError:
            raise MeasurementUnavailable(key) from None


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CategoryCalibration:
    category: Category
    energy: float
    time: float
    n_test: int
    reference: MeasurementSample
    test: MeasurementSample


def _measure_pair(spec: KernelPairSpec, source: MeasurementSource) -> CategoryCalibration:
    ref_img, test_img = gen_kernel_pair(spec).images()
    ref = source.measure(ref_img)
    test = source.measure(test_img)
    n = spec.n_test
    return CategoryCalibration(spec.category, (test.energy - ref.energy) / n,
                               (test.time - ref.time) / n, n, ref, test)


def calibrate_category(spec: KernelPairSpec, source: MeasurementSource) -> CategoryCalibration:
    """Specific energy and time of one category by kernel differencing."""
    cal = _measure_pair(spec, source)
    if cal.test.energy < cal.reference.energy:
        raise NegativeDelta(spec.category, "energy", cal.test.energy - cal.reference.energy)
    if cal.test.time < cal.reference.time:
        raise NegativeDelta(spec.category, "time", cal.test.time - cal.reference.time)
    return cal


@dataclass(frozen=True)
class ConsistencyChecks:
    """Plausibility limits applied to every calibrated category."""
    min_time: float = 1e-10                   # seconds per instruction
    power_band: tuple[float, float] = (1e-3, 10.0)  # watts, e_c / t_c

    def problems(self, energy: float, time: float) -> list[str]:
        out = []
        if energy < 0:
            out.append(f"negative energy delta ({energy:.6g} J)")
        if time < 0:
            out.append(f"negative time delta ({time:.6g} s)")
        elif time < self.min_time:
            out.append(f"time {time:.6g} s below floor {self.min_time:.6g} s")
        if time > 0 and energy >= 0:
            power = energy / time
            lo, hi = self.power_band
            if not lo <= power <= hi:
                out.append(f"implied power {power:.6g} W outside [{lo:g}, {hi:g}] W")
        return out


def calibrate_all(specs: Mapping[Category, KernelPairSpec] | Sequence[KernelPairSpec],
                  source: MeasurementSource, *, checks: ConsistencyChecks | None = None,
                  workers: int | None = None, platform: str = "calibrated",
                  hardware_config: str | None = None) -> CostProfile:
    """Calibrate every category; implausible results are flagged ``pending``.

    Flagged categories keep their raw measured value so the inconsistency
    stays visible; they must be adapted manually before the profile can be
    used with negative entries.
    """
    if not isinstance(specs, Mapping):
        specs = {s.category: s for s in specs}
    missing = [c for c in Category if c not in specs]
    if missing:
        raise IncompleteCoverage(missing)
    checks = checks or ConsistencyChecks()
    order = list(Category)
    if workers is None:
        workers = min(len(order), os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _measure_pair(specs[c], source), order))
    else:
        results = [_measure_pair(specs[c], source) for c in order]

    costs = {}
    notes = []
    for cal in results:
        problems = checks.problems(cal.energy, cal.time)
        flag = "pending" if problems else False
        if problems:
            notes.append(f"{cal.category.name}: " + "; ".join(problems))
        costs[cal.category] = CategoryCost(cal.time, cal.energy, flag)
    spec0 = specs[order[0]]
    provenance = (f"kernel differencing, loop_count={spec0.loop_count}, "
                  f"body_repeat={spec0.body_repeat}")
    if notes:
        provenance += "; flagged: " + " | ".join(notes)
    return CostProfile(costs, platform=platform, hardware_config=hardware_config,
                       provenance=provenance)


def parse_source(text: str, config: HardwareConfig | None = None) -> MeasurementSource:
    """Build a source from ``synthetic:<truth.json>:<sigma>:<seed>`` or ``csv:<file>``."""
    from .costmodel import load_profile

    kind, _, rest = text.partition(":")
    if kind == "csv" and rest:
        return CsvImport.load(rest)
    if kind == "synthetic":
        parts = rest.rsplit(":", 2)
        if len(parts) == 3:
            path, sigma, seed = parts
            return SyntheticPlatform(load_profile(path), float(sigma), int(seed), config)
    raise ValueError(f"bad measurement source {text!r}; expected "
                     "synthetic:<truth.json>:<sigma>:<seed> or csv:<file>")
