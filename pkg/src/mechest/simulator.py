"""Instruction-accurate SV8-mini simulator with per-category counters.

The fetch/decode/execute loop is compiled with numba.  Counting happens
inside that loop: every retired instruction bumps exactly one of the nine
category registers (plus a per-opcode diagnostic counter).  No observer
callbacks are involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numba
import numpy as np

from . import isa
from .assembler import BinaryImage
from .errors import (
    BudgetExhausted,
    FpuAbsent,
    IllegalInstruction,
    ImageTooLarge,
    MachineHalted,
    MemoryFault,
    MisalignedAccess,
)
from .isa import Category

DEFAULT_MEMORY_SIZE = 16 * 1024 * 1024
DEFAULT_BUDGET = 2**32
CANONICAL_NAN = 0x7FF8000000000000


# ---------------------------------------------------------------------------
# counts and configuration
# ---------------------------------------------------------------------------

class CategoryCounts:
    """Executed-instruction counts per category (the model's n_c)."""

    __slots__ = ("_n",)

    def __init__(self, counts: Mapping[Category, int] | Iterable[int] | None = None):
        n = [0] * len(Category)
        if counts is None:
            pass
        elif isinstance(counts, Mapping):
            for cat, value in counts.items():
                n[Category(cat) if not isinstance(cat, str) else Category.parse(cat)] = int(value)
        else:
            values = [int(v) for v in counts]
            if len(values) != len(Category):
                raise ValueError(f"expected {len(Category)} counts, got {len(values)}")
            n = values
        if any(v < 0 for v in n):
            raise ValueError("instruction counts must be non-negative")
        self._n = n

    def __getitem__(self, cat: Category) -> int:
        return self._n[cat]

    def __iter__(self):
        return iter(Category)

    def items(self):
        return [(c, self._n[c]) for c in Category]

    def total(self) -> int:
        return sum(self._n)

    def as_list(self) -> list[int]:
        return list(self._n)

    def __add__(self, other: "CategoryCounts") -> "CategoryCounts":
        return CategoryCounts([a + b for a, b in zip(self._n, other._n)])

    def __sub__(self, other: "CategoryCounts") -> dict[Category, int]:
        """Signed per-category difference (may be negative, so not a CategoryCounts)."""
        return {c: self._n[c] - other._n[c] for c in Category}

    def __mul__(self, k: int) -> "CategoryCounts":
        return CategoryCounts([v * int(k) for v in self._n])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, CategoryCounts) and self._n == other._n

    def __hash__(self):
        return hash(tuple(self._n))

    def __repr__(self) -> str:
        inner = ", ".join(f"{c.name}={v}" for c, v in self.items() if v)
        return f"CategoryCounts({inner})"

    def fractions(self) -> dict[Category, float]:
        total = self.total()
        return {c: (v / total if total else 0.0) for c, v in self.items()}

    def to_json(self) -> dict:
        out = {c.name: v for c, v in self.items()}
        out["total"] = self.total()
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "CategoryCounts":
        missing = [c.name for c in Category if c.name not in obj]
        if missing:
            raise ValueError("counts file lacks categories: " + ", ".join(missing))
        counts = cls({c: int(obj[c.name]) for c in Category})
        if "total" in obj and int(obj["total"]) != counts.total():
            raise ValueError("counts file 'total' does not match the category sum")
        return counts

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CategoryCounts":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class HardwareConfig:
    name: str
    fpu_present: bool = True
    logical_elements: int = 1
    memory_size: int = DEFAULT_MEMORY_SIZE

    def __post_init__(self):
        if self.logical_elements <= 0:
            raise ValueError("logical_elements must be positive")
        if self.memory_size <= 0 or self.memory_size > 2**32 or self.memory_size % 4:
            raise ValueError("memory_size must be a positive multiple of 4 no larger than 4 GiB")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "fpu_present": self.fpu_present,
            "logical_elements": self.logical_elements,
            "memory_size": self.memory_size,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "HardwareConfig":
        return cls(
            name=str(obj["name"]),
            fpu_present=bool(obj.get("fpu_present", True)),
            logical_elements=int(obj.get("logical_elements", 1)),
            memory_size=int(obj.get("memory_size", DEFAULT_MEMORY_SIZE)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "HardwareConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# decode tables handed to the compiled loop
# ---------------------------------------------------------------------------

def _zero_masks() -> np.ndarray:
    """Per-opcode mask of bits that must be zero in a valid word."""
    masks = np.zeros(64, dtype=np.int64)
    for op in isa.OPS.values():
        used = 0
        regs, width = isa._FIELDS[op.layout]
        for name, shift in zip(regs, isa._SHIFTS):
            if name is not None:
                used |= 31 << shift
        if width == 16:
            used |= 0xFFFF
        elif width == 5:
            used |= 31
        elif width == 26:
            used |= 0x3FFFFFF
        masks[op.opcode] = 0x3FFFFFF & ~used
    return masks


def _fp_flags() -> np.ndarray:
    flags = np.zeros(64, dtype=np.int64)
    for op in isa.OPS.values():
        if op.uses_fp_regs:
            flags[op.opcode] = 1
    return flags


_ZERO_MASKS = _zero_masks()
_FP_FLAGS = _fp_flags()
_OPC = {m: op.opcode for m, op in isa.OPS.items()}

ST_BUDGET, ST_HALTED, ST_ILLEGAL, ST_MISALIGNED, ST_MEMFAULT, ST_FPU_ABSENT = range(6)

# opcode constants for the compiled loop
_NOP, _HALT, _RET = _OPC["NOP"], _OPC["HALT"], _OPC["RET"]
_ADD, _SUB, _AND, _OR, _XOR = _OPC["ADD"], _OPC["SUB"], _OPC["AND"], _OPC["OR"], _OPC["XOR"]
_SLL, _SRL, _SRA, _SLT, _SLTU = _OPC["SLL"], _OPC["SRL"], _OPC["SRA"], _OPC["SLT"], _OPC["SLTU"]
_MUL, _MULHU, _DIV, _DIVU, _REM, _REMU = (
    _OPC["MUL"], _OPC["MULHU"], _OPC["DIV"], _OPC["DIVU"], _OPC["REM"], _OPC["REMU"])
_MOV, _JR, _JALR = _OPC["MOV"], _OPC["JR"], _OPC["JALR"]
_ADDI, _ANDI, _ORI, _XORI = _OPC["ADDI"], _OPC["ANDI"], _OPC["ORI"], _OPC["XORI"]
_SLLI, _SRLI, _SRAI, _SLTI, _SLTIU, _LUI = (
    _OPC["SLLI"], _OPC["SRLI"], _OPC["SRAI"], _OPC["SLTI"], _OPC["SLTIU"], _OPC["LUI"])
_LD, _LDB, _ST, _STB, _FLD, _FST = (
    _OPC["LD"], _OPC["LDB"], _OPC["ST"], _OPC["STB"], _OPC["FLD"], _OPC["FST"])
_BEQ, _BNE, _BLT, _BGE, _BLTU, _BGEU, _J, _CALL = (
    _OPC["BEQ"], _OPC["BNE"], _OPC["BLT"], _OPC["BGE"], _OPC["BLTU"], _OPC["BGEU"],
    _OPC["J"], _OPC["CALL"])
_FADDS, _FSUBS, _FMULS, _FDIVS, _FSQRTS = (
    _OPC["FADD.S"], _OPC["FSUB.S"], _OPC["FMUL.S"], _OPC["FDIV.S"], _OPC["FSQRT.S"])
_FADDD, _FSUBD, _FMULD, _FDIVD, _FSQRTD, _FMOVD = (
    _OPC["FADD.D"], _OPC["FSUB.D"], _OPC["FMUL.D"], _OPC["FDIV.D"], _OPC["FSQRT.D"], _OPC["FMOV.D"])

_M32 = 0xFFFFFFFF


@numba.njit(cache=True, inline="always")
def _sx32(v):
    return v - ((v & 0x80000000) << 1)


@numba.njit(cache=True, inline="always")
def _rd32(mem, a):
    return (np.int64(mem[a]) << 24) | (np.int64(mem[a + 1]) << 16) | (np.int64(mem[a + 2]) << 8) | np.int64(mem[a + 3])


@numba.njit(cache=True, inline="always")
def _wr32(mem, a, v):
    mem[a] = (v >> 24) & 0xFF
    mem[a + 1] = (v >> 16) & 0xFF
    mem[a + 2] = (v >> 8) & 0xFF
    mem[a + 3] = v & 0xFF


@numba.njit(cache=True, inline="always")
def _fpstore(fbits, fvals, i, x):
    if x != x:
        fbits[i] = np.uint64(CANONICAL_NAN)
    else:
        fvals[i] = x


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _execute(mem, regs, fbits, fvals, machine, counts, op_counts,
             cat_table, zero_masks, fp_flags, fpu_present, budget):
    """Run until HALT, a fault, or ``budget`` retired instructions.

    ``machine`` holds [pc, halted]; returns (status, executed, fault_address).
    """
    memsize = mem.shape[0]
    pc = machine[0]
    executed = 0
    status = ST_BUDGET
    fault = 0
    while executed < budget:
        if pc & 3:
            status = ST_MISALIGNED
            fault = pc
            break
        if pc < 0 or pc + 3 >= memsize:
            status = ST_MEMFAULT
            fault = pc
            break
        w = _rd32(mem, pc)
        op = w >> 26
        cat = cat_table[op]
        if cat < 0 or (w & zero_masks[op]) != 0:
            status = ST_ILLEGAL
            fault = pc
            break
        if fp_flags[op] != 0 and not fpu_present:
            status = ST_FPU_ABSENT
            fault = pc
            break
        a = (w >> 21) & 31
        b = (w >> 16) & 31
        c = (w >> 11) & 31
        imm = w & 0xFFFF
        if imm & 0x8000:
            imm -= 0x10000
        npc = pc + 4
        halt = False

        if op == _ADD:
            regs[a] = (regs[b] + regs[c]) & _M32
        elif op == _ADDI:
            regs[a] = (regs[b] + imm) & _M32
        elif op == _BLT:
            if _sx32(regs[a]) < _sx32(regs[b]):
                npc = pc + 4 * imm
        elif op == _BNE:
            if regs[a] != regs[b]:
                npc = pc + 4 * imm
        elif op == _BEQ:
            if regs[a] == regs[b]:
                npc = pc + 4 * imm
        elif op == _LD or op == _ST or op == _LDB or op == _STB or op == _FLD or op == _FST:
            addr = (regs[b] + imm) & _M32
            if op == _LDB or op == _STB:
                if addr >= memsize:
                    status = ST_MEMFAULT
                    fault = addr
                    break
                if op == _LDB:
                    regs[a] = np.int64(mem[addr])
                else:
                    mem[addr] = regs[a] & 0xFF
            else:
                if addr & 3:
                    status = ST_MISALIGNED
                    fault = addr
                    break
                width = 8 if (op == _FLD or op == _FST) else 4
                if addr + width > memsize:
                    status = ST_MEMFAULT
                    fault = addr
                    break
                if op == _LD:
                    regs[a] = _rd32(mem, addr)
                elif op == _ST:
                    _wr32(mem, addr, regs[a])
                elif op == _FLD:
                    hi = np.uint64(_rd32(mem, addr))
                    lo = np.uint64(_rd32(mem, addr + 4))
                    fbits[a] = (hi << np.uint64(32)) | lo
                else:
                    bits = fbits[a]
                    _wr32(mem, addr, np.int64(bits >> np.uint64(32)))
                    _wr32(mem, addr + 4, np.int64(bits & np.uint64(0xFFFFFFFF)))
        elif op == _SUB:
            regs[a] = (regs[b] - regs[c]) & _M32
        elif op == _AND:
            regs[a] = regs[b] & regs[c]
        elif op == _OR:
            regs[a] = regs[b] | regs[c]
        elif op == _XOR:
            regs[a] = regs[b] ^ regs[c]
        elif op == _SLL:
            regs[a] = (regs[b] << (regs[c] & 31)) & _M32
        elif op == _SRL:
            regs[a] = regs[b] >> (regs[c] & 31)
        elif op == _SRA:
            regs[a] = (_sx32(regs[b]) >> (regs[c] & 31)) & _M32
        elif op == _SLT:
            regs[a] = 1 if _sx32(regs[b]) < _sx32(regs[c]) else 0
        elif op == _SLTU:
            regs[a] = 1 if regs[b] < regs[c] else 0
        elif op == _MUL:
            regs[a] = (regs[b] * regs[c]) & _M32
        elif op == _MULHU:
            p = np.uint64(regs[b]) * np.uint64(regs[c])
            regs[a] = np.int64(p >> np.uint64(32))
        elif op == _DIV or op == _REM:
            x = _sx32(regs[b])
            y = _sx32(regs[c])
            if y == 0:
                q = -1
                r = x
            else:
                q = abs(x) // abs(y)
                if (x < 0) != (y < 0):
                    q = -q
                r = x - q * y
            regs[a] = (q if op == _DIV else r) & _M32
        elif op == _DIVU or op == _REMU:
            x = regs[b]
            y = regs[c]
            if y == 0:
                q = _M32
                r = x
            else:
                q = x // y
                r = x - q * y
            regs[a] = q if op == _DIVU else r
        elif op == _ANDI:
            regs[a] = regs[b] & (imm & _M32)
        elif op == _ORI:
            regs[a] = regs[b] | (imm & _M32)
        elif op == _XORI:
            regs[a] = regs[b] ^ (imm & _M32)
        elif op == _SLLI:
            regs[a] = (regs[b] << (w & 31)) & _M32
        elif op == _SRLI:
            regs[a] = regs[b] >> (w & 31)
        elif op == _SRAI:
            regs[a] = (_sx32(regs[b]) >> (w & 31)) & _M32
        elif op == _SLTI:
            regs[a] = 1 if _sx32(regs[b]) < imm else 0
        elif op == _SLTIU:
            regs[a] = 1 if regs[b] < (imm & _M32) else 0
        elif op == _LUI:
            regs[a] = (imm << 16) & _M32
        elif op == _MOV:
            regs[a] = regs[b]
        elif op == _BGE:
            if _sx32(regs[a]) >= _sx32(regs[b]):
                npc = pc + 4 * imm
        elif op == _BLTU:
            if regs[a] < regs[b]:
                npc = pc + 4 * imm
        elif op == _BGEU:
            if regs[a] >= regs[b]:
                npc = pc + 4 * imm
        elif op == _J or op == _CALL:
            disp = w & 0x3FFFFFF
            if disp & 0x2000000:
                disp -= 0x4000000
            if op == _CALL:
                regs[31] = npc
            npc = pc + 4 * disp
        elif op == _JR:
            npc = regs[b]
        elif op == _JALR:
            target = regs[b]
            regs[a] = npc
            npc = target
        elif op == _RET:
            npc = regs[31]
        elif op == _NOP:
            pass
        elif op == _HALT:
            halt = True
        elif op == _FADDD:
            _fpstore(fbits, fvals, a, fvals[b] + fvals[c])
        elif op == _FSUBD:
            _fpstore(fbits, fvals, a, fvals[b] - fvals[c])
        elif op == _FMULD:
            _fpstore(fbits, fvals, a, fvals[b] * fvals[c])
        elif op == _FDIVD:
            _fpstore(fbits, fvals, a, fvals[b] / fvals[c])
        elif op == _FSQRTD:
            _fpstore(fbits, fvals, a, np.sqrt(fvals[b]))
        elif op == _FMOVD:
            fbits[a] = fbits[b]
        elif op == _FADDS:
            _fpstore(fbits, fvals, a, np.float64(np.float32(fvals[b] + fvals[c])))
        elif op == _FSUBS:
            _fpstore(fbits, fvals, a, np.float64(np.float32(fvals[b] - fvals[c])))
        elif op == _FMULS:
            _fpstore(fbits, fvals, a, np.float64(np.float32(fvals[b] * fvals[c])))
        elif op == _FDIVS:
            _fpstore(fbits, fvals, a, np.float64(np.float32(fvals[b] / fvals[c])))
        elif op == _FSQRTS:
            _fpstore(fbits, fvals, a, np.float64(np.float32(np.sqrt(fvals[b]))))
        else:
            status = ST_ILLEGAL
            fault = pc
            break

        regs[0] = 0
        counts[cat] += 1
        op_counts[op] += 1
        executed += 1
        pc = npc & _M32
        if halt:
            machine[1] = 1
            status = ST_HALTED
            break
    machine[0] = pc
    return status, executed, fault


# ---------------------------------------------------------------------------
# machine state
# ---------------------------------------------------------------------------

@dataclass
class MachineState:
    """Architectural state of one SV8-mini machine.

    ``int_regs`` hold unsigned 32-bit values, ``fp_regs`` raw binary64
    bit patterns.  ``memory`` is big-endian.
    """

    config: HardwareConfig
    memory: np.ndarray
    int_regs: np.ndarray = field(default_factory=lambda: np.zeros(32, dtype=np.int64))
    fp_regs: np.ndarray = field(default_factory=lambda: np.zeros(32, dtype=np.uint64))
    pc: int = 0
    halted: bool = False
    counts: CategoryCounts = field(default_factory=CategoryCounts)
    op_counts: np.ndarray = field(default_factory=lambda: np.zeros(64, dtype=np.int64))
    category_overrides: Mapping[str, Category] | None = None

    def __post_init__(self):
        self._counts = np.array(self.counts.as_list(), dtype=np.int64)
        self._cat_table = isa.category_table(self.category_overrides)

    @property
    def executed(self) -> int:
        return int(self._counts.sum())

    def fp_value(self, i: int) -> float:
        return float(self.fp_regs[i:i + 1].view(np.float64)[0])

    def read_word(self, addr: int) -> int:
        return int.from_bytes(self.memory[addr:addr + 4].tobytes(), "big")

    def read_bytes(self, addr: int, n: int) -> bytes:
        return self.memory[addr:addr + n].tobytes()

    def mnemonic_counts(self) -> dict[str, int]:
        """Diagnostic per-mnemonic counts (not used by the cost model)."""
        return {op.mnemonic: int(self.op_counts[op.opcode])
                for op in isa.OPS.values() if self.op_counts[op.opcode]}

    def _advance(self, budget: int) -> tuple[int, int]:
        if self.halted:
            raise MachineHalted("machine already halted")
        machine = np.array([self.pc, 0], dtype=np.int64)
        status, executed, fault = _execute(
            self.memory, self.int_regs, self.fp_regs, self.fp_regs.view(np.float64),
            machine, self._counts, self.op_counts, self._cat_table,
            _ZERO_MASKS, _FP_FLAGS, self.config.fpu_present, budget,
        )
        self.pc = int(machine[0])
        self.halted = bool(machine[1])
        self.counts = CategoryCounts(self._counts.tolist())
        if status == ST_ILLEGAL:
            raise IllegalInstruction(self.read_word(self.pc), self.pc)
        if status == ST_MISALIGNED:
            raise MisalignedAccess(int(fault), self.pc)
        if status == ST_MEMFAULT:
            raise MemoryFault(int(fault), self.pc)
        if status == ST_FPU_ABSENT:
            raise FpuAbsent(self.pc)
        return status, int(executed)

    def step(self) -> "MachineState":
        """Execute exactly one instruction in place and return ``self``."""
        self._advance(1)
        return self


def load(img: BinaryImage, cfg: HardwareConfig,
         category_overrides: Mapping[str, Category] | None = None) -> MachineState:
    size = cfg.memory_size
    if img.text_end > size or img.data_end > size:
        raise ImageTooLarge(f"image needs {max(img.text_end, img.data_end)} bytes, "
                            f"config {cfg.name!r} has {size}")
    memory = np.zeros(size, dtype=np.uint8)
    text = img.text_bytes()
    memory[img.text_base:img.text_base + len(text)] = np.frombuffer(text, dtype=np.uint8)
    if img.data:
        memory[img.data_base:img.data_end] = np.frombuffer(img.data, dtype=np.uint8)
    state = MachineState(cfg, memory, pc=img.entry_point, category_overrides=category_overrides)
    state.int_regs[isa.REG_SP] = size & 0xFFFFFFFF
    return state


def step(state: MachineState) -> MachineState:
    return state.step()


@dataclass
class RunResult:
    final: MachineState
    counts: CategoryCounts
    executed: int


def run(img: BinaryImage, cfg: HardwareConfig, budget: int = DEFAULT_BUDGET,
        category_overrides: Mapping[str, Category] | None = None) -> RunResult:
    """Execute ``img`` until HALT.

    Raises BudgetExhausted (carrying the partial RunResult) if ``budget``
    instructions retire without reaching HALT.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    state = load(img, cfg, category_overrides)
    status, executed = state._advance(budget)
    result = RunResult(state, state.counts, executed)
    if status == ST_BUDGET:
        raise BudgetExhausted(result)
    return result
