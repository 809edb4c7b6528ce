"""Bundled assembly workloads and a random mixed-kernel generator.

Two workloads ship with the package:

``hevc_like``
    integer block transform, clipping and memory copies over 16 4x4 blocks
``fse_like``
    double-precision iterative projection of a 64-sample signal onto a
    cosine basis, with one divide per candidate and one square root per
    iteration

Both embed their input data between ``; @data-begin`` and ``; @data-end``
markers; :func:`workload_source` regenerates that block for other seeds.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping

from ..assembler import BinaryImage, SourceUnit, assemble, parse
from ..errors import FingerprintError
from ..isa import Category
from ..simulator import CategoryCounts

_BEGIN = "; @data-begin"
_END = "; @data-end"

DEFAULT_TOLERANCE = 0.03


def _words(label: str, values, per_line: int = 8) -> list[str]:
    out = [f"{label}:"]
    for k in range(0, len(values), per_line):
        out.append("    .word " + ", ".join(str(v) for v in values[k:k + per_line]))
    return out


def _bytes(label: str, values, per_line: int = 16) -> list[str]:
    out = [f"{label}:"]
    for k in range(0, len(values), per_line):
        out.append("    .byte " + ", ".join(str(v) for v in values[k:k + per_line]))
    return out


def _doubles(label: str, values, per_line: int = 4) -> list[str]:
    out = [f"{label}:"]
    for k in range(0, len(values), per_line):
        out.append("    .double " + ", ".join(repr(float(v)) for v in values[k:k + per_line]))
    return out


def hevc_inputs(seed: int) -> dict[str, list[int]]:
    """Residual coefficients (16 blocks x 16) and prediction samples."""
    rng = random.Random(seed)
    coeffs = []
    for _ in range(16):
        block = [0] * 16
        # energy concentrated in the low-frequency corner
        for pos in (0, 1, 4, 5, 2, 8):
            if rng.random() < 0.8:
                block[pos] = rng.randint(-96, 96)
        if rng.random() < 0.3:
            block[rng.randrange(16)] = rng.randint(-24, 24)
        coeffs += block
    base = rng.randint(40, 200)
    pred = [max(0, min(255, base + rng.randint(-40, 40) + (i % 16) - 8)) for i in range(256)]
    return {"coeffs": coeffs, "pred": pred}


def _hevc_data(seed: int) -> list[str]:
    d = hevc_inputs(seed)
    return _words("coeffs", d["coeffs"]) + _bytes("pred", d["pred"])


FSE_N = 64
FSE_K = 8
FSE_ITER = 8


def fse_inputs(seed: int) -> dict[str, list[float]]:
    """Signal, window weights and a cosine basis (row-major, K x N)."""
    rng = random.Random(seed)
    n = FSE_N
    basis = [math.cos(math.pi * k * (i + 0.5) / n) for k in range(FSE_K) for i in range(n)]
    weight = [0.55 - 0.45 * math.cos(2 * math.pi * (i + 0.5) / n) for i in range(n)]
    amps = [rng.uniform(-2.0, 2.0) if rng.random() < 0.6 else 0.0 for _ in range(FSE_K)]
    signal = [sum(a * basis[k * n + i] for k, a in enumerate(amps)) + rng.gauss(0.0, 0.05)
              for i in range(n)]
    return {"signal": signal, "weight": weight, "basis": basis}


def _fse_data(seed: int) -> list[str]:
    d = fse_inputs(seed)
    return _doubles("signal", d["signal"]) + _doubles("weight", d["weight"]) + _doubles("basis", d["basis"])


_GENERATORS: dict[str, Callable[[int], list[str]]] = {
    "hevc_like": _hevc_data,
    "fse_like": _fse_data,
}

WORKLOAD_NAMES = tuple(_GENERATORS)


def _bundled_text(filename: str) -> str:
    return resources.files(__name__).joinpath(filename).read_text()


def _splice(text: str, data_lines: list[str]) -> str:
    head, sep, rest = text.partition(_BEGIN)
    if not sep:
        raise ValueError("source has no data marker")
    _, sep, tail = rest.partition(_END)
    if not sep:
        raise ValueError("source has no data end marker")
    return head + _BEGIN + "\n" + "\n".join(data_lines) + "\n" + _END + tail


def workload_source(name: str, seed: int = 0) -> SourceUnit:
    """Source of a bundled workload with input data generated from ``seed``."""
    if name not in _GENERATORS:
        raise KeyError(f"unknown workload {name!r}; known: {', '.join(WORKLOAD_NAMES)}")
    text = _splice(_bundled_text(f"{name}.s"), _GENERATORS[name](seed))
    return parse(text, f"{name}.s")


def workload_images(name: str, seed: int = 0) -> tuple[BinaryImage, BinaryImage]:
    """(hard-float, soft-float) images of a bundled workload."""
    src = workload_source(name, seed)
    return assemble(src), assemble(src, soft_float=True)


# ---------------------------------------------------------------------------
# descriptors and fingerprints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorkloadDescriptor:
    name: str
    source: str
    fingerprint: Mapping[Category, tuple[float, float]]  # fraction, tolerance
    description: str = ""

    def __post_init__(self):
        total = sum(frac for frac, _ in self.fingerprint.values())
        if abs(total - 1.0) > 1e-9:
            raise FingerprintError(f"{self.name}: fingerprint fractions sum to {total!r}, not 1")
        for cat, (frac, tol) in self.fingerprint.items():
            if not 0.0 <= frac <= 1.0 or tol < 0:
                raise FingerprintError(f"{self.name}: bad fingerprint entry for {cat.name}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "source": self.source,
            "description": self.description,
            "fingerprint": {c.name: [f, t] for c, (f, t) in self.fingerprint.items()},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "WorkloadDescriptor":
        fp = {Category.parse(k): (float(v[0]), float(v[1])) for k, v in obj["fingerprint"].items()}
        return cls(str(obj["name"]), str(obj["source"]), fp, str(obj.get("description", "")))


def verify_fingerprint(w: WorkloadDescriptor, counts: CategoryCounts) -> dict[Category, bool]:
    """Per-category verdict: is the observed fraction within tolerance?"""
    fractions = counts.fractions()
    verdicts = {}
    for cat in Category:
        frac, tol = w.fingerprint.get(cat, (0.0, 0.0))
        verdicts[cat] = abs(fractions[cat] - frac) <= tol
    return verdicts


def fingerprint_of(counts: CategoryCounts, tolerance: float = DEFAULT_TOLERANCE) -> dict[Category, tuple[float, float]]:
    fr = counts.fractions()
    return {c: (fr[c], 0.0 if fr[c] == 0.0 else tolerance) for c in Category}


def load_manifest(path: str | Path | None = None) -> list[WorkloadDescriptor]:
    text = Path(path).read_text() if path else _bundled_text("manifest.json")
    obj = json.loads(text)
    return [WorkloadDescriptor.from_json(w) for w in obj["workloads"]]


def source_path(w: WorkloadDescriptor, manifest_path: str | Path | None = None) -> Path | None:
    """Filesystem path of a descriptor's source, or None for bundled sources."""
    if manifest_path is None:
        return None
    return Path(manifest_path).parent / w.source


# ---------------------------------------------------------------------------
# random mixed kernels
# ---------------------------------------------------------------------------

_INT_RRR = ("ADD", "SUB", "AND", "OR", "XOR", "SLL", "SRL", "SRA", "SLT", "SLTU", "MUL", "MULHU", "DIV", "REM")
_INT_RRI = ("ADDI", "ANDI", "ORI", "XORI", "SLTI")
_FP_ARITH = ("FADD.D", "FSUB.D", "FMUL.D")


def _random_instruction(rng: random.Random, weights: Mapping[Category, float]) -> list[str]:
    cats = list(weights)
    cat = rng.choices(cats, [weights[c] for c in cats])[0]
    r = lambda: f"r{rng.randint(3, 15)}"
    f = lambda: f"f{rng.randint(1, 8)}"
    if cat is Category.IntegerArithmetic:
        if rng.random() < 0.6:
            return [f"{rng.choice(_INT_RRR)} {r()}, {r()}, {r()}"]
        return [f"{rng.choice(_INT_RRI)} {r()}, {r()}, {rng.randint(-500, 500)}"]
    if cat is Category.Jump:
        return ["BEQ r0, r0, 1"] if rng.random() < 0.5 else [f"BNE {r()}, {r()}, 2", "NOP"]
    if cat is Category.MemoryLoad:
        return [f"{rng.choice(('LD', 'LDB'))} {r()}, {4 * rng.randrange(64)}(r20)"]
    if cat is Category.MemoryStore:
        return [f"{rng.choice(('ST', 'STB'))} {r()}, {4 * rng.randrange(64)}(r20)"]
    if cat is Category.Nop:
        return ["NOP"]
    if cat is Category.Other:
        return [f"MOV {r()}, {r()}"] if rng.random() < 0.7 else [f"LUI {r()}, {rng.randint(-32768, 32767)}"]
    if cat is Category.FpuArithmetic:
        return [f"{rng.choice(_FP_ARITH)} {f()}, {f()}, {f()}"]
    if cat is Category.FpuDivide:
        return [f"FDIV.D {f()}, {f()}, {f()}"]
    return [f"FSQRT.D {f()}, {f()}"]


def random_mixed_kernel(seed: int, *, fp: bool = True) -> SourceUnit:
    """A loop whose body is a random instruction mix drawn from all categories.

    Category weights, body length and loop count vary with ``seed`` so a
    suite of kernels spans integer-heavy to FP-heavy mixes.
    """
    rng = random.Random(seed)
    weights = {c: rng.uniform(0.2, 1.0) for c in Category}
    for c in (Category.FpuDivide, Category.FpuSqrt):
        weights[c] *= 0.15
    if not fp or rng.random() < 0.25:
        for c in (Category.FpuArithmetic, Category.FpuDivide, Category.FpuSqrt):
            weights[c] = 0.0
    body = []
    for _ in range(rng.randint(20, 80)):
        body += _random_instruction(rng, weights)
    loops = rng.randint(200, 2000)
    lines = [
        f"; random mixed kernel, seed {seed}",
        ".text",
        ".entry main",
        "main:",
        "    LA r20, buf",
        "    LA r21, fvals",
        *(f"    FLD f{k}, {8 * (k - 1)}(r21)" for k in range(1, 9)),
        *(f"    ADDI r{k}, r0, {rng.randint(-1000, 1000)}" for k in range(3, 16)),
        f"    LI r2, {loops}",
        "    ADDI r1, r0, 0",
        "loop:",
        *("    " + b for b in body),
        "    ADDI r1, r1, 1",
        "    BLT r1, r2, loop",
        "    HALT",
        ".data",
        ".align 8",
        "fvals:",
        "    .double " + ", ".join(repr(rng.uniform(0.5, 4.0)) for _ in range(8)),
        "buf:",
    ]
    words = [rng.getrandbits(31) for _ in range(64)]
    for k in range(0, 64, 8):
        lines.append("    .word " + ", ".join(map(str, words[k:k + 8])))
    return parse("\n".join(lines) + "\n", f"mixed-{seed}")


def evaluation_suite(n_mixed: int = 20, workload_seeds: tuple[int, ...] = (0, 1)) -> list[tuple[str, BinaryImage]]:
    """Named images for error evaluation: random mixes plus workload variants."""
    suite = [(f"mixed-{s}", assemble(random_mixed_kernel(s))) for s in range(n_mixed)]
    for name in WORKLOAD_NAMES:
        for s in workload_seeds:
            hard, soft = workload_images(name, s)
            suite.append((f"{name}-{s}", hard))
            suite.append((f"{name}-{s}-soft", soft))
    return suite
