"""SV8-mini: a small SPARC-flavoured 32-bit RISC instruction set.

Every instruction word is 32 bits with a 6-bit opcode in bits 31..26.
The remaining bits are split into fields according to the instruction's
layout::

    A = bits 25..21   B = bits 20..16   C = bits 15..11
    imm16 = bits 15..0 (two's complement)   disp26 = bits 25..0

Fields an instruction does not use must be zero, which makes the
encoding a bijection between instructions and the set of valid words.

Each mnemonic belongs to exactly one of nine cost categories.  The
category depends only on the mnemonic, never on the operands.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import EncodingOverflow, IllegalInstruction, UnknownMnemonic

ISA_VERSION = "1"


class Category(enum.IntEnum):
    """Instruction cost categories, in fixed declaration (summation) order."""

    IntegerArithmetic = 0
    Jump = 1
    MemoryLoad = 2
    MemoryStore = 3
    Nop = 4
    Other = 5
    FpuArithmetic = 6
    FpuDivide = 7
    FpuSqrt = 8

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, name: str) -> "Category":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown category {name!r}") from None


FP_CATEGORIES = frozenset({Category.FpuArithmetic, Category.FpuDivide, Category.FpuSqrt})


class Form(enum.Enum):
    RegReg = "RegReg"
    RegImm = "RegImm"
    Branch = "Branch"
    Mem = "Mem"
    FpOp = "FpOp"
    Sys = "Sys"


@dataclass(frozen=True)
class OpInfo:
    mnemonic: str
    opcode: int
    form: Form
    layout: str
    category: Category

    @property
    def uses_fp_regs(self) -> bool:
        return self.layout in ("fff", "ff", "fload", "fstore")


# layout -> (fields used, in assembly operand order)
#   rrr     rd, rs1, rs2
#   rr      rd, rs1
#   s       rs1
#   rri     rd, rs1, imm
#   shift   rd, rs1, imm (0..31)
#   ri      rd, imm
#   load    rd, imm(rs1)           (A=rd, B=rs1)
#   store   rs2, imm(rs1)          (A=rs2, B=rs1)
#   br      rs1, rs2, disp16       (A=rs1, B=rs2)
#   jmp     disp26
#   fff/ff  FP register variants of rrr/rr
#   fload   fd, imm(rs1)
#   fstore  fs, imm(rs1)
#   none    no operands

_C = Category
_TABLE: list[OpInfo] = [
    OpInfo("NOP", 0x00, Form.Sys, "none", _C.Nop),
    OpInfo("HALT", 0x01, Form.Sys, "none", _C.Other),
    OpInfo("RET", 0x02, Form.Sys, "none", _C.Jump),
    OpInfo("ADD", 0x04, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("SUB", 0x05, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("AND", 0x06, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("OR", 0x07, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("XOR", 0x08, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("SLL", 0x09, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("SRL", 0x0A, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("SRA", 0x0B, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("SLT", 0x0C, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("SLTU", 0x0D, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("MUL", 0x0E, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("MULHU", 0x0F, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("DIV", 0x10, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("DIVU", 0x11, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("REM", 0x12, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("REMU", 0x13, Form.RegReg, "rrr", _C.IntegerArithmetic),
    OpInfo("MOV", 0x14, Form.RegReg, "rr", _C.Other),
    OpInfo("JR", 0x15, Form.RegReg, "s", _C.Jump),
    OpInfo("JALR", 0x16, Form.RegReg, "rr", _C.Jump),
    OpInfo("ADDI", 0x18, Form.RegImm, "rri", _C.IntegerArithmetic),
    OpInfo("ANDI", 0x19, Form.RegImm, "rri", _C.IntegerArithmetic),
    OpInfo("ORI", 0x1A, Form.RegImm, "rri", _C.IntegerArithmetic),
    OpInfo("XORI", 0x1B, Form.RegImm, "rri", _C.IntegerArithmetic),
    OpInfo("SLLI", 0x1C, Form.RegImm, "shift", _C.IntegerArithmetic),
    OpInfo("SRLI", 0x1D, Form.RegImm, "shift", _C.IntegerArithmetic),
    OpInfo("SRAI", 0x1E, Form.RegImm, "shift", _C.IntegerArithmetic),
    OpInfo("SLTI", 0x1F, Form.RegImm, "rri", _C.IntegerArithmetic),
    OpInfo("SLTIU", 0x20, Form.RegImm, "rri", _C.IntegerArithmetic),
    OpInfo("LUI", 0x21, Form.RegImm, "ri", _C.Other),
    OpInfo("LD", 0x24, Form.Mem, "load", _C.MemoryLoad),
    OpInfo("LDB", 0x25, Form.Mem, "load", _C.MemoryLoad),
    OpInfo("ST", 0x26, Form.Mem, "store", _C.MemoryStore),
    OpInfo("STB", 0x27, Form.Mem, "store", _C.MemoryStore),
    OpInfo("FLD", 0x28, Form.Mem, "fload", _C.MemoryLoad),
    OpInfo("FST", 0x29, Form.Mem, "fstore", _C.MemoryStore),
    OpInfo("BEQ", 0x2C, Form.Branch, "br", _C.Jump),
    OpInfo("BNE", 0x2D, Form.Branch, "br", _C.Jump),
    OpInfo("BLT", 0x2E, Form.Branch, "br", _C.Jump),
    OpInfo("BGE", 0x2F, Form.Branch, "br", _C.Jump),
    OpInfo("BLTU", 0x30, Form.Branch, "br", _C.Jump),
    OpInfo("BGEU", 0x31, Form.Branch, "br", _C.Jump),
    OpInfo("J", 0x32, Form.Branch, "jmp", _C.Jump),
    OpInfo("CALL", 0x33, Form.Branch, "jmp", _C.Jump),
    OpInfo("FADD.S", 0x34, Form.FpOp, "fff", _C.FpuArithmetic),
    OpInfo("FSUB.S", 0x35, Form.FpOp, "fff", _C.FpuArithmetic),
    OpInfo("FMUL.S", 0x36, Form.FpOp, "fff", _C.FpuArithmetic),
    OpInfo("FDIV.S", 0x37, Form.FpOp, "fff", _C.FpuDivide),
    OpInfo("FSQRT.S", 0x38, Form.FpOp, "ff", _C.FpuSqrt),
    OpInfo("FADD.D", 0x39, Form.FpOp, "fff", _C.FpuArithmetic),
    OpInfo("FSUB.D", 0x3A, Form.FpOp, "fff", _C.FpuArithmetic),
    OpInfo("FMUL.D", 0x3B, Form.FpOp, "fff", _C.FpuArithmetic),
    OpInfo("FDIV.D", 0x3C, Form.FpOp, "fff", _C.FpuDivide),
    OpInfo("FSQRT.D", 0x3D, Form.FpOp, "ff", _C.FpuSqrt),
    OpInfo("FMOV.D", 0x3E, Form.FpOp, "ff", _C.Other),
]
del _C

OPS: dict[str, OpInfo] = {op.mnemonic: op for op in _TABLE}
OPS_BY_OPCODE: dict[int, OpInfo] = {op.opcode: op for op in _TABLE}

# Bare FP mnemonics name the double-precision forms.
ALIASES = {
    "FADD": "FADD.D",
    "FSUB": "FSUB.D",
    "FMUL": "FMUL.D",
    "FDIV": "FDIV.D",
    "FSQRT": "FSQRT.D",
    "FMOV": "FMOV.D",
}

# Register conventions.
REG_SP = 29
REG_LINK = 31

# opcode -> layout code, consumed by the simulator kernel
LAYOUT_CODES = {
    "none": 0, "rrr": 1, "rr": 2, "s": 3, "rri": 4, "shift": 5, "ri": 6,
    "load": 7, "store": 8, "br": 9, "jmp": 10, "fff": 11, "ff": 12,
    "fload": 13, "fstore": 14,
}


def canonical_mnemonic(mnemonic: str) -> str:
    m = mnemonic.upper()
    m = ALIASES.get(m, m)
    if m not in OPS:
        raise UnknownMnemonic(mnemonic)
    return m


def op_info(mnemonic: str) -> OpInfo:
    return OPS[canonical_mnemonic(mnemonic)]


def category_of(mnemonic: str, overrides: Mapping[str, Category] | None = None) -> Category:
    """Category of ``mnemonic``; ``overrides`` (canonical mnemonic -> Category) wins if given."""
    m = canonical_mnemonic(mnemonic)
    if overrides and m in overrides:
        return overrides[m]
    return OPS[m].category


def load_category_overrides(path: str | Path) -> dict[str, Category]:
    """Read an alias file: a JSON object mapping mnemonics to category names."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("category override file must hold a JSON object")
    return {canonical_mnemonic(k): Category.parse(v) for k, v in raw.items()}


def category_table(overrides: Mapping[str, Category] | None = None) -> np.ndarray:
    """Opcode-indexed category lookup (length 64, -1 for undefined opcodes)."""
    table = np.full(64, -1, dtype=np.int64)
    for op in _TABLE:
        table[op.opcode] = int(category_of(op.mnemonic, overrides))
    return table


def layout_table() -> np.ndarray:
    table = np.full(64, -1, dtype=np.int64)
    for op in _TABLE:
        table[op.opcode] = LAYOUT_CODES[op.layout]
    return table


@dataclass(frozen=True)
class Word:
    raw: int

    def __post_init__(self):
        if not 0 <= self.raw <= 0xFFFFFFFF:
            raise ValueError(f"word out of range: {self.raw:#x}")

    def __int__(self) -> int:
        return self.raw


@dataclass(frozen=True)
class Instruction:
    """A decoded instruction.

    ``rd``, ``rs1`` and ``rs2`` index the integer or FP register file
    depending on the layout; ``imm`` holds the immediate, memory offset
    or word displacement.  Unused operands are zero.
    """

    mnemonic: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mnemonic", canonical_mnemonic(self.mnemonic))

    @property
    def info(self) -> OpInfo:
        return OPS[self.mnemonic]

    @property
    def category(self) -> Category:
        return OPS[self.mnemonic].category

    @property
    def encoding_form(self) -> Form:
        return OPS[self.mnemonic].form

    def __str__(self) -> str:
        return format_instruction(self)


# layout -> (A, B, C) operand sources and whether imm16 / disp26 is present
_FIELDS = {
    "none": ((), None),
    "rrr": (("rd", "rs1", "rs2"), None),
    "rr": (("rd", "rs1"), None),
    "s": ((None, "rs1"), None),
    "rri": (("rd", "rs1"), 16),
    "shift": (("rd", "rs1"), 5),
    "ri": (("rd",), 16),
    "load": (("rd", "rs1"), 16),
    "store": (("rs2", "rs1"), 16),
    "br": (("rs1", "rs2"), 16),
    "jmp": ((), 26),
    "fff": (("rd", "rs1", "rs2"), None),
    "ff": (("rd", "rs1"), None),
    "fload": (("rd", "rs1"), 16),
    "fstore": (("rs2", "rs1"), 16),
}
_SHIFTS = (21, 16, 11)


def _used(layout: str) -> set[str]:
    regs, width = _FIELDS[layout]
    used = {r for r in regs if r}
    if width:
        used.add("imm")
    return used


def encode(instr: Instruction) -> Word:
    """Encode ``instr``; raises EncodingOverflow if an operand does not fit."""
    info = instr.info
    regs, width = _FIELDS[info.layout]
    used = _used(info.layout)
    for name in ("rd", "rs1", "rs2", "imm"):
        if name not in used and getattr(instr, name) != 0:
            raise EncodingOverflow(f"{instr.mnemonic} does not take operand {name}")
    word = info.opcode << 26
    for name, shift in zip(regs, _SHIFTS):
        if name is None:
            continue
        value = getattr(instr, name)
        if not 0 <= value < 32:
            raise EncodingOverflow(f"{instr.mnemonic}: register {name}={value} out of range")
        word |= value << shift
    if width == 16:
        if not -0x8000 <= instr.imm <= 0x7FFF:
            raise EncodingOverflow(f"{instr.mnemonic}: immediate {instr.imm} exceeds 16-bit signed range")
        word |= instr.imm & 0xFFFF
    elif width == 5:
        if not 0 <= instr.imm < 32:
            raise EncodingOverflow(f"{instr.mnemonic}: shift amount {instr.imm} out of range")
        word |= instr.imm
    elif width == 26:
        if not -(1 << 25) <= instr.imm < (1 << 25):
            raise EncodingOverflow(f"{instr.mnemonic}: displacement {instr.imm} exceeds 26-bit signed range")
        word |= instr.imm & 0x3FFFFFF
    return Word(word)


def decode(w: Word | int) -> Instruction:
    """Decode a 32-bit word; raises IllegalInstruction for undefined patterns."""
    raw = int(w)
    if not 0 <= raw <= 0xFFFFFFFF:
        raise IllegalInstruction(raw & 0xFFFFFFFF)
    info = OPS_BY_OPCODE.get(raw >> 26)
    if info is None:
        raise IllegalInstruction(raw)
    regs, width = _FIELDS[info.layout]
    fields = {"rd": 0, "rs1": 0, "rs2": 0, "imm": 0}
    covered = 0xFC000000
    for name, shift in zip(regs, _SHIFTS):
        if name is not None:
            fields[name] = (raw >> shift) & 31
            covered |= 31 << shift
    if width == 16:
        imm = raw & 0xFFFF
        fields["imm"] = imm - 0x10000 if imm & 0x8000 else imm
        covered |= 0xFFFF
    elif width == 5:
        fields["imm"] = raw & 31
        covered |= 0xFFFF  # upper imm bits must be zero
        if raw & 0xFFE0:
            raise IllegalInstruction(raw)
    elif width == 26:
        disp = raw & 0x3FFFFFF
        fields["imm"] = disp - (1 << 26) if disp & (1 << 25) else disp
        covered |= 0x3FFFFFF
    if raw & ~covered & 0xFFFFFFFF:
        raise IllegalInstruction(raw)
    return Instruction(info.mnemonic, **fields)


def format_instruction(instr: Instruction) -> str:
    layout = instr.info.layout
    r = lambda n: f"r{n}"  # noqa: E731
    f = lambda n: f"f{n}"  # noqa: E731
    m = instr.mnemonic
    if layout == "none":
        return m
    if layout == "rrr":
        return f"{m} {r(instr.rd)}, {r(instr.rs1)}, {r(instr.rs2)}"
    if layout == "rr":
        return f"{m} {r(instr.rd)}, {r(instr.rs1)}"
    if layout == "s":
        return f"{m} {r(instr.rs1)}"
    if layout in ("rri", "shift"):
        return f"{m} {r(instr.rd)}, {r(instr.rs1)}, {instr.imm}"
    if layout == "ri":
        return f"{m} {r(instr.rd)}, {instr.imm}"
    if layout == "load":
        return f"{m} {r(instr.rd)}, {instr.imm}({r(instr.rs1)})"
    if layout == "store":
        return f"{m} {r(instr.rs2)}, {instr.imm}({r(instr.rs1)})"
    if layout == "br":
        return f"{m} {r(instr.rs1)}, {r(instr.rs2)}, {instr.imm}"
    if layout == "jmp":
        return f"{m} {instr.imm}"
    if layout == "fff":
        return f"{m} {f(instr.rd)}, {f(instr.rs1)}, {f(instr.rs2)}"
    if layout == "ff":
        return f"{m} {f(instr.rd)}, {f(instr.rs1)}"
    if layout == "fload":
        return f"{m} {f(instr.rd)}, {instr.imm}({r(instr.rs1)})"
    if layout == "fstore":
        return f"{m} {f(instr.rs2)}, {instr.imm}({r(instr.rs1)})"
    raise AssertionError(layout)


_OPERAND_SYNTAX = {
    "none": "",
    "rrr": "rd, rs1, rs2",
    "rr": "rd, rs1",
    "s": "rs1",
    "rri": "rd, rs1, imm16",
    "shift": "rd, rs1, shamt5",
    "ri": "rd, imm16",
    "load": "rd, imm16(rs1)",
    "store": "rs2, imm16(rs1)",
    "br": "rs1, rs2, disp16",
    "jmp": "disp26",
    "fff": "fd, fs1, fs2",
    "ff": "fd, fs1",
    "fload": "fd, imm16(rs1)",
    "fstore": "fs, imm16(rs1)",
}

_FIELD_LAYOUT = {
    "none": "[31:26]=op, [25:0]=0",
    "rrr": "[31:26]=op [25:21]=rd [20:16]=rs1 [15:11]=rs2 [10:0]=0",
    "rr": "[31:26]=op [25:21]=rd [20:16]=rs1 [15:0]=0",
    "s": "[31:26]=op [25:21]=0 [20:16]=rs1 [15:0]=0",
    "rri": "[31:26]=op [25:21]=rd [20:16]=rs1 [15:0]=imm16",
    "shift": "[31:26]=op [25:21]=rd [20:16]=rs1 [15:5]=0 [4:0]=shamt",
    "ri": "[31:26]=op [25:21]=rd [20:16]=0 [15:0]=imm16",
    "load": "[31:26]=op [25:21]=rd [20:16]=rs1 [15:0]=imm16",
    "store": "[31:26]=op [25:21]=rs2 [20:16]=rs1 [15:0]=imm16",
    "br": "[31:26]=op [25:21]=rs1 [20:16]=rs2 [15:0]=disp16",
    "jmp": "[31:26]=op [25:0]=disp26",
    "fff": "[31:26]=op [25:21]=fd [20:16]=fs1 [15:11]=fs2 [10:0]=0",
    "ff": "[31:26]=op [25:21]=fd [20:16]=fs1 [15:0]=0",
    "fload": "[31:26]=op [25:21]=fd [20:16]=rs1 [15:0]=imm16",
    "fstore": "[31:26]=op [25:21]=fs [20:16]=rs1 [15:0]=imm16",
}


def isa_reference() -> str:
    """Human-readable encoding table (the normative reference for SV8-mini)."""
    lines = [
        f"# SV8-mini instruction set reference (ISA version {ISA_VERSION})",
        "",
        "32 integer registers r0..r31 (r0 reads as zero, r29 = stack pointer,",
        "r31 = link register), 32 FP registers f0..f31 holding binary64 values.",
        "Big-endian memory. Branch displacements count words relative to the",
        "branch's own address. FP results that are NaN are canonicalised to",
        "0x7ff8000000000000.",
        "",
        "| mnemonic | opcode | form | operands | field layout | category |",
        "|---|---|---|---|---|---|",
    ]
    for op in _TABLE:
        lines.append(
            f"| {op.mnemonic} | 0x{op.opcode:02x} | {op.form.value} | "
            f"{_OPERAND_SYNTAX[op.layout]} | {_FIELD_LAYOUT[op.layout]} | {op.category.name} |"
        )
    lines += ["", "Aliases: " + ", ".join(f"{k} = {v}" for k, v in ALIASES.items()), ""]
    return "\n".join(lines)
