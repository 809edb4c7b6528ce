"""Two-pass assembler and disassembler for SV8-mini.

Source syntax, one statement per line::

    label:  MNEMONIC operands   ; comment

Mnemonics and register names are case-insensitive, labels are not.
Directives: ``.text``, ``.data``, ``.word``, ``.double``, ``.byte``,
``.space``, ``.align``, ``.global``, ``.entry``.  Pseudo-instructions:
``LI rd, imm32`` and ``LA rd, label`` (both expand to ``LUI`` + ``ADDI``).
Immediates accept ``%hi(label)`` / ``%lo(label)``.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import isa
from .errors import (
    AsmSyntaxError,
    BranchOutOfRange,
    DuplicateLabel,
    EncodingOverflow,
    IllegalInstruction,
    ImageFormatError,
    UndefinedLabel,
    UnknownMnemonic,
)
from .isa import Instruction

TEXT_BASE = 0x0000_1000
DATA_BASE = 0x0010_0000
IMAGE_MAGIC = b"SV8M"
IMAGE_VERSION = 1

_LABEL_RE = re.compile(r"^[A-Za-z_.$][A-Za-z0-9_.$]*$")
_MEM_RE = re.compile(r"^(.*)\((\s*[A-Za-z0-9]+\s*)\)$")
_HILO_RE = re.compile(r"^%(hi|lo)\(\s*([A-Za-z_.$][A-Za-z0-9_.$]*)\s*\)$")
_REG_ALIASES = {"zero": 0, "sp": isa.REG_SP, "ra": isa.REG_LINK}


# ---------------------------------------------------------------------------
# source representation
# ---------------------------------------------------------------------------

@dataclass
class SourceLine:
    label: str | None = None
    statement: str | None = None
    comment: str | None = None
    lineno: int = 0

    def render(self) -> str:
        text = f"{self.label}:" if self.label else ""
        if self.statement:
            text = f"{text} {self.statement}" if text else f"    {self.statement}"
        if self.comment is not None:
            text = (text + "  " if text else "") + "; " + self.comment
        return text


@dataclass
class SourceUnit:
    lines: list[SourceLine] = field(default_factory=list)
    name: str = "<source>"

    def render(self) -> str:
        return "\n".join(line.render() for line in self.lines) + "\n"

    def __add__(self, other: "SourceUnit") -> "SourceUnit":
        return SourceUnit(self.lines + other.lines, self.name)

    @property
    def labels(self) -> list[str]:
        return [ln.label for ln in self.lines if ln.label]


def parse(text: str, name: str = "<source>") -> SourceUnit:
    """Split assembly text into labelled statements (no semantic checks)."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, sep, comment = raw.partition(";")
        body = body.strip()
        labels = []
        while True:
            m = re.match(r"^([A-Za-z_.$][A-Za-z0-9_.$]*)\s*:(.*)$", body)
            if not m:
                break
            labels.append(m.group(1))
            body = m.group(2).strip()
        stmt = body or None
        cmt = comment.strip() if sep else None
        if not labels:
            lines.append(SourceLine(None, stmt, cmt, lineno))
        else:
            for lab in labels[:-1]:
                lines.append(SourceLine(lab, None, None, lineno))
            lines.append(SourceLine(labels[-1], stmt, cmt, lineno))
    return SourceUnit(lines, name)


def read_source(path: str | Path) -> SourceUnit:
    path = Path(path)
    return parse(path.read_text(), name=str(path))


# ---------------------------------------------------------------------------
# binary image
# ---------------------------------------------------------------------------

@dataclass
class BinaryImage:
    entry_point: int
    text_base: int
    text: list[int]
    data_base: int
    data: bytes
    magic: bytes = IMAGE_MAGIC

    def __post_init__(self):
        self.text = [int(w) & 0xFFFFFFFF for w in self.text]
        self.data = bytes(self.data)
        if self.text_base % 4:
            raise ImageFormatError("text base not word aligned")
        if self.text and not (self.text_base <= self.entry_point < self.text_end):
            raise ImageFormatError(f"entry point 0x{self.entry_point:x} outside text segment")
        if self.entry_point % 4:
            raise ImageFormatError("entry point not word aligned")
        if self.data and self.text and self.text_base < self.data_end and self.data_base < self.text_end:
            raise ImageFormatError("text and data segments overlap")

    @property
    def text_end(self) -> int:
        return self.text_base + 4 * len(self.text)

    @property
    def data_end(self) -> int:
        return self.data_base + len(self.data)

    def text_bytes(self) -> bytes:
        return np.asarray(self.text, dtype=">u4").tobytes()

    def to_bytes(self) -> bytes:
        text = self.text_bytes()
        header = struct.pack(
            "<4s6I", self.magic, IMAGE_VERSION, self.entry_point,
            self.text_base, len(text), self.data_base, len(self.data),
        )
        return header + text + self.data

    @classmethod
    def from_bytes(cls, blob: bytes) -> "BinaryImage":
        hsize = struct.calcsize("<4s6I")
        if len(blob) < hsize:
            raise ImageFormatError("image shorter than header")
        magic, version, entry, tbase, tlen, dbase, dlen = struct.unpack_from("<4s6I", blob)
        if magic != IMAGE_MAGIC:
            raise ImageFormatError(f"bad magic {magic!r}")
        if version != IMAGE_VERSION:
            raise ImageFormatError(f"unsupported image version {version}")
        if tlen % 4:
            raise ImageFormatError("text length not a multiple of 4")
        if len(blob) != hsize + tlen + dlen:
            raise ImageFormatError("image size does not match header")
        text = np.frombuffer(blob, dtype=">u4", count=tlen // 4, offset=hsize).tolist()
        data = blob[hsize + tlen:]
        return cls(entry, tbase, text, dbase, data)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "BinaryImage":
        return cls.from_bytes(Path(path).read_bytes())

    def content_hash(self) -> str:
        import hashlib

        return hashlib.sha256(self.to_bytes()).hexdigest()

    def decoded(self) -> list[Instruction]:
        out = []
        for i, w in enumerate(self.text):
            try:
                out.append(isa.decode(w))
            except IllegalInstruction:
                raise IllegalInstruction(w, self.text_base + 4 * i) from None
        return out


# ---------------------------------------------------------------------------
# operand parsing
# ---------------------------------------------------------------------------

def _parse_int(tok: str) -> int:
    return int(tok.replace("_", ""), 0)


def _is_int(tok: str) -> bool:
    try:
        _parse_int(tok)
    except ValueError:
        return False
    return True


def _reg(tok: str, prefix: str, line: int) -> int:
    t = tok.strip().lower()
    if prefix == "r" and t in _REG_ALIASES:
        return _REG_ALIASES[t]
    if len(t) >= 2 and t[0] == prefix and t[1:].isdigit():
        n = int(t[1:])
        if n < 32:
            return n
    kind = "integer" if prefix == "r" else "FP"
    raise AsmSyntaxError(f"expected {kind} register, got {tok!r}", line)


def _split_operands(text: str) -> list[str]:
    text = text.strip()
    if not text:
        return []
    return [t.strip() for t in text.split(",")]


def _hi(value: int) -> int:
    hi = ((value + 0x8000) >> 16) & 0xFFFF
    return hi - 0x10000 if hi & 0x8000 else hi


def _lo(value: int) -> int:
    lo = value & 0xFFFF
    return lo - 0x10000 if lo & 0x8000 else lo


Resolver = Callable[[str], int]


def _imm(tok: str, resolve: Resolver | None, line: int) -> int:
    tok = tok.strip()
    if _is_int(tok):
        return _parse_int(tok)
    m = _HILO_RE.match(tok)
    if m:
        if resolve is None:
            return 0
        addr = resolve(m.group(2))
        return _hi(addr) if m.group(1) == "hi" else _lo(addr)
    raise AsmSyntaxError(f"bad immediate {tok!r}", line)


def _mem(tok: str, resolve: Resolver | None, line: int) -> tuple[int, int]:
    m = _MEM_RE.match(tok.strip())
    if not m:
        raise AsmSyntaxError(f"expected offset(reg), got {tok!r}", line)
    off = m.group(1).strip()
    return (_imm(off, resolve, line) if off else 0), _reg(m.group(2), "r", line)


def parse_instruction(mnemonic: str, operand_text: str, line: int = 0,
                      resolve: Resolver | None = None, address: int = 0) -> Instruction:
    """Parse one machine instruction.  Branch targets may be labels when ``resolve`` is given."""
    info = isa.op_info(mnemonic)
    ops = _split_operands(operand_text)
    layout = info.layout
    expected = {
        "none": 0, "rrr": 3, "rr": 2, "s": 1, "rri": 3, "shift": 3, "ri": 2,
        "load": 2, "store": 2, "br": 3, "jmp": 1, "fff": 3, "ff": 2,
        "fload": 2, "fstore": 2,
    }[layout]
    if len(ops) != expected:
        raise AsmSyntaxError(f"{info.mnemonic} takes {expected} operand(s), got {len(ops)}", line)
    r = lambda t: _reg(t, "r", line)  # noqa: E731
    f = lambda t: _reg(t, "f", line)  # noqa: E731
    m = info.mnemonic
    if layout == "none":
        return Instruction(m)
    if layout == "rrr":
        return Instruction(m, rd=r(ops[0]), rs1=r(ops[1]), rs2=r(ops[2]))
    if layout == "rr":
        return Instruction(m, rd=r(ops[0]), rs1=r(ops[1]))
    if layout == "s":
        return Instruction(m, rs1=r(ops[0]))
    if layout in ("rri", "shift"):
        return Instruction(m, rd=r(ops[0]), rs1=r(ops[1]), imm=_imm(ops[2], resolve, line))
    if layout == "ri":
        return Instruction(m, rd=r(ops[0]), imm=_imm(ops[1], resolve, line))
    if layout == "load":
        off, base = _mem(ops[1], resolve, line)
        return Instruction(m, rd=r(ops[0]), rs1=base, imm=off)
    if layout == "store":
        off, base = _mem(ops[1], resolve, line)
        return Instruction(m, rs2=r(ops[0]), rs1=base, imm=off)
    if layout == "fload":
        off, base = _mem(ops[1], resolve, line)
        return Instruction(m, rd=f(ops[0]), rs1=base, imm=off)
    if layout == "fstore":
        off, base = _mem(ops[1], resolve, line)
        return Instruction(m, rs2=f(ops[0]), rs1=base, imm=off)
    if layout == "fff":
        return Instruction(m, rd=f(ops[0]), rs1=f(ops[1]), rs2=f(ops[2]))
    if layout == "ff":
        return Instruction(m, rd=f(ops[0]), rs1=f(ops[1]))
    if layout in ("br", "jmp"):
        target = ops[-1]
        if _is_int(target):
            disp = _parse_int(target)
        elif resolve is None:
            disp = 0
        else:
            disp = (resolve(target) - address) // 4
        bits = 16 if layout == "br" else 26
        if not -(1 << (bits - 1)) <= disp < (1 << (bits - 1)):
            raise BranchOutOfRange(f"{m} displacement {disp} exceeds {bits}-bit range", line)
        if layout == "br":
            return Instruction(m, rs1=r(ops[0]), rs2=r(ops[1]), imm=disp)
        return Instruction(m, imm=disp)
    raise AssertionError(layout)


# ---------------------------------------------------------------------------
# assembler
# ---------------------------------------------------------------------------

@dataclass
class _TextItem:
    line: int
    size: int
    emit: Callable[[Resolver, int], list[int]]


def _encode_checked(instr: Instruction, line: int) -> int:
    try:
        return isa.encode(instr).raw
    except EncodingOverflow as exc:
        raise EncodingOverflow(f"line {line}: {exc}") from None


def _expand_pseudo(mnemonic: str, operand_text: str, line: int) -> _TextItem | None:
    m = mnemonic.upper()
    if m == "LI":
        ops = _split_operands(operand_text)
        if len(ops) != 2 or not _is_int(ops[1]):
            raise AsmSyntaxError("LI takes a register and an integer constant", line)
        rd = _reg(ops[0], "r", line)
        value = _parse_int(ops[1])
        if not -(1 << 31) <= value < (1 << 32):
            raise EncodingOverflow(f"line {line}: LI constant {value} exceeds 32 bits")
        value &= 0xFFFFFFFF
        signed = value - (1 << 32) if value & 0x80000000 else value
        if -0x8000 <= signed <= 0x7FFF:
            words = [Instruction("ADDI", rd=rd, rs1=0, imm=signed)]
        else:
            words = [Instruction("LUI", rd=rd, imm=_hi(value))]
            if _lo(value):
                words.append(Instruction("ADDI", rd=rd, rs1=rd, imm=_lo(value)))
        enc = [_encode_checked(i, line) for i in words]
        return _TextItem(line, len(enc), lambda resolve, addr: enc)
    if m == "LA":
        ops = _split_operands(operand_text)
        if len(ops) != 2:
            raise AsmSyntaxError("LA takes a register and a label", line)
        rd = _reg(ops[0], "r", line)
        sym = ops[1]

        def emit(resolve, addr):
            target = resolve(sym)
            return [
                _encode_checked(Instruction("LUI", rd=rd, imm=_hi(target)), line),
                _encode_checked(Instruction("ADDI", rd=rd, rs1=rd, imm=_lo(target)), line),
            ]

        return _TextItem(line, 2, emit)
    return None


def _lowered_items(instr: Instruction, line: int) -> list[_TextItem]:
    from .softfloat import SymbolicCall, lower

    items = []
    for low in lower(instr):
        if isinstance(low, SymbolicCall):
            callee = low.target

            def emit(resolve, addr, callee=callee):
                disp = (resolve(callee) - addr) // 4
                return [_encode_checked(Instruction("CALL", imm=disp), line)]

            items.append(_TextItem(line, 1, emit))
        else:
            word = _encode_checked(low, line)
            items.append(_TextItem(line, 1, lambda resolve, addr, w=word: [w]))
    return items


def assemble(src: SourceUnit | str, soft_float: bool = False) -> BinaryImage:
    """Assemble ``src`` into a loadable image.

    With ``soft_float`` every FP-register instruction is replaced by
    integer code (see :mod:`mechest.softfloat`) and the runtime library
    is appended whenever at least one instruction was lowered.
    """
    return _link(src, soft_float)[0]


def symbol_table(src: SourceUnit | str, soft_float: bool = False) -> dict[str, int]:
    """Addresses of all labels, as laid out by :func:`assemble`."""
    return {name: addr for name, (addr, _) in _link(src, soft_float)[1].items()}


def _link(src: SourceUnit | str, soft_float: bool):
    if isinstance(src, str):
        src = parse(src)
    from .softfloat import runtime_library

    lines = list(src.lines)
    text_items, data, symbols, entry_name, needs_runtime = _pass1(lines, soft_float)
    if needs_runtime:
        lib = runtime_library()
        lib_items, lib_data, lib_symbols, _, _ = _pass1(
            lib.lines, False,
            text_start=TEXT_BASE + 4 * sum(it.size for it in text_items),
            data_start=DATA_BASE + len(data),
        )
        for name in lib_symbols:
            if name in symbols:
                raise DuplicateLabel(name)
        text_items += lib_items
        data += lib_data
        symbols.update(lib_symbols)

    def resolve(name: str, line: int | None = None) -> int:
        try:
            return symbols[name][0]
        except KeyError:
            raise UndefinedLabel(name, line) from None

    words: list[int] = []
    addr = TEXT_BASE
    for item in text_items:
        emitted = item.emit(lambda n, _l=item.line: resolve(n, _l), addr)
        if len(emitted) != item.size:
            raise AssertionError("pass 1/2 size mismatch")
        words.extend(emitted)
        addr += 4 * item.size

    resolved_data = bytearray()
    for chunk in data:
        resolved_data += chunk(resolve) if callable(chunk) else chunk

    if entry_name is None:
        entry = TEXT_BASE
    else:
        if entry_name not in symbols:
            raise UndefinedLabel(entry_name)
        entry, section = symbols[entry_name]
        if section != "text":
            raise AsmSyntaxError(f".entry label {entry_name!r} is not in .text")
    if TEXT_BASE + 4 * len(words) > DATA_BASE:
        raise AsmSyntaxError("text segment overflows into data segment")
    return BinaryImage(entry, TEXT_BASE, words, DATA_BASE, bytes(resolved_data)), symbols


def _pass1(lines: Iterable[SourceLine], soft_float: bool, text_start: int = TEXT_BASE,
           data_start: int = DATA_BASE):
    section = "text"
    text_items: list[_TextItem] = []
    data: list = []  # bytes or callables producing bytes
    text_pc = text_start
    data_pc = data_start
    symbols: dict[str, tuple[int, str]] = {}
    entry_name = None
    needs_runtime = False

    for ln in lines:
        line = ln.lineno
        if ln.label:
            if not _LABEL_RE.match(ln.label):
                raise AsmSyntaxError(f"bad label {ln.label!r}", line)
            if ln.label in symbols:
                raise DuplicateLabel(ln.label, line)
            symbols[ln.label] = (text_pc if section == "text" else data_pc, section)
        if not ln.statement:
            continue
        head, *tail = ln.statement.split(None, 1)
        rest = tail[0].strip() if tail else ""
        if head.startswith("."):
            directive = head.lower()
            if directive in (".text", ".data"):
                section = directive[1:]
                if rest:
                    raise AsmSyntaxError(f"{directive} takes no operands", line)
                continue
            if directive == ".global":
                continue
            if directive == ".entry":
                if not _LABEL_RE.match(rest):
                    raise AsmSyntaxError(".entry needs a label", line)
                entry_name = rest
                continue
            if section != "data":
                raise AsmSyntaxError(f"data directive {directive} outside .data", line)
            chunk, size, align = _data_directive(directive, rest, line)
            pad = (-data_pc) % align
            if pad:
                data.append(bytes(pad))
                data_pc += pad
                if ln.label:
                    symbols[ln.label] = (data_pc, section)
            data.append(chunk)
            data_pc += size
            continue
        if section != "text":
            raise AsmSyntaxError("instruction outside .text", line)
        pseudo = _expand_pseudo(head, rest, line)
        if pseudo is not None:
            text_items.append(pseudo)
            text_pc += 4 * pseudo.size
            continue
        try:
            info = isa.op_info(head)
        except UnknownMnemonic:
            raise AsmSyntaxError(f"unknown mnemonic {head!r}", line) from None
        if soft_float and info.uses_fp_regs:
            instr = parse_instruction(head, rest, line)
            items = _lowered_items(instr, line)
            text_items += items
            text_pc += 4 * len(items)
            needs_runtime = True
            continue
        parse_instruction(head, rest, line)  # syntax check now, labels resolved in pass 2

        def emit(resolve, addr, head=head, rest=rest, line=line):
            return [_encode_checked(parse_instruction(head, rest, line, resolve, addr), line)]

        text_items.append(_TextItem(line, 1, emit))
        text_pc += 4
    return text_items, data, symbols, entry_name, needs_runtime


def _data_directive(directive: str, rest: str, line: int):
    ops = _split_operands(rest)
    if directive == ".word":
        if not ops:
            raise AsmSyntaxError(".word needs values", line)
        for t in ops:
            if not (_is_int(t) or _LABEL_RE.match(t)):
                raise AsmSyntaxError(f"bad .word value {t!r}", line)

        def chunk(resolve, ops=ops):
            out = bytearray()
            for t in ops:
                v = _parse_int(t) if _is_int(t) else resolve(t, line)
                if not -(1 << 31) <= v < (1 << 32):
                    raise EncodingOverflow(f"line {line}: .word value {v} exceeds 32 bits")
                out += struct.pack(">I", v & 0xFFFFFFFF)
            return bytes(out)

        return chunk, 4 * len(ops), 4
    if directive == ".double":
        try:
            values = [float.fromhex(t) if t.lower().lstrip("+-").startswith("0x") else float(t) for t in ops]
        except ValueError:
            raise AsmSyntaxError(f"bad .double operand in {rest!r}", line) from None
        if not values:
            raise AsmSyntaxError(".double needs values", line)
        return struct.pack(f">{len(values)}d", *values), 8 * len(values), 8
    if directive == ".byte":
        try:
            values = [_parse_int(t) for t in ops]
        except ValueError:
            raise AsmSyntaxError(f"bad .byte operand in {rest!r}", line) from None
        if not values or any(not -128 <= v < 256 for v in values):
            raise AsmSyntaxError(".byte values must fit in 8 bits", line)
        return bytes(v & 0xFF for v in values), len(values), 1
    if directive == ".space":
        if len(ops) != 1 or not _is_int(ops[0]) or _parse_int(ops[0]) < 0:
            raise AsmSyntaxError(".space takes one non-negative size", line)
        n = _parse_int(ops[0])
        return bytes(n), n, 1
    if directive == ".align":
        if len(ops) != 1 or not _is_int(ops[0]) or _parse_int(ops[0]) <= 0:
            raise AsmSyntaxError(".align takes one positive alignment", line)
        return b"", 0, _parse_int(ops[0])
    raise AsmSyntaxError(f"unknown directive {directive}", line)


# ---------------------------------------------------------------------------
# disassembler
# ---------------------------------------------------------------------------

def _label_for(addr: int) -> str:
    return f"L_{addr:08x}"


def disassemble(img: BinaryImage) -> SourceUnit:
    """Turn an image back into source that reassembles to the same words."""
    if img.text_base != TEXT_BASE or (img.data and img.data_base != DATA_BASE):
        raise ImageFormatError("disassembly supports only the standard segment layout")
    instrs = img.decoded()
    targets = {img.entry_point}
    for i, ins in enumerate(instrs):
        if ins.info.layout in ("br", "jmp"):
            t = img.text_base + 4 * (i + ins.imm)
            if img.text_base <= t < img.text_end:
                targets.add(t)
    lines = [SourceLine(None, ".text"), SourceLine(None, f".entry {_label_for(img.entry_point)}")]
    for i, ins in enumerate(instrs):
        addr = img.text_base + 4 * i
        text = isa.format_instruction(ins)
        if ins.info.layout in ("br", "jmp"):
            t = img.text_base + 4 * (i + ins.imm)
            if t in targets:
                prefix = text.rsplit(" ", 1)[0] if ins.info.layout == "jmp" else text.rsplit(",", 1)[0] + ","
                text = f"{prefix} {_label_for(t)}"
        label = _label_for(addr) if addr in targets else None
        lines.append(SourceLine(label, text))
    if img.data:
        lines.append(SourceLine(None, ".data"))
        data = img.data
        whole = len(data) - len(data) % 4
        for off in range(0, whole, 16):
            chunk = data[off:min(off + 16, whole)]
            words = struct.unpack(f">{len(chunk) // 4}I", chunk)
            lines.append(SourceLine(None, ".word " + ", ".join(f"0x{w:08x}" for w in words)))
        if whole < len(data):
            lines.append(SourceLine(None, ".byte " + ", ".join(str(b) for b in data[whole:])))
    return SourceUnit(lines, "<disassembly>")
