import random

import pytest
from hypothesis import given, strategies as st

from mechest import isa
from mechest.errors import EncodingOverflow, IllegalInstruction, UnknownMnemonic
from mechest.isa import Category, Form, Instruction, Word, category_of, decode, encode


def random_instruction(rng):
    """A uniformly chosen mnemonic with in-range operands for its layout."""
    op = rng.choice(list(isa.OPS.values()))
    regs, width = isa._FIELDS[op.layout]
    kw = {name: rng.randrange(32) for name in regs if name}
    if width == 16:
        kw["imm"] = rng.randint(-0x8000, 0x7FFF)
    elif width == 5:
        kw["imm"] = rng.randrange(32)
    elif width == 26:
        kw["imm"] = rng.randint(-(1 << 25), (1 << 25) - 1)
    return Instruction(op.mnemonic, **kw)


class TestCategories:
    def test_exactly_nine(self):
        assert len(Category) == 9
        assert [c.name for c in Category] == [
            "IntegerArithmetic", "Jump", "MemoryLoad", "MemoryStore", "Nop",
            "Other", "FpuArithmetic", "FpuDivide", "FpuSqrt",
        ]

    @pytest.mark.parametrize("mnemonic, cat", [
        ("FMUL", Category.FpuArithmetic),
        ("FADD.S", Category.FpuArithmetic),
        ("FSUB.D", Category.FpuArithmetic),
        ("FDIV", Category.FpuDivide),
        ("FDIV.S", Category.FpuDivide),
        ("FSQRT.D", Category.FpuSqrt),
        ("LD", Category.MemoryLoad),
        ("LDB", Category.MemoryLoad),
        ("ST", Category.MemoryStore),
        ("STB", Category.MemoryStore),
        ("NOP", Category.Nop),
        ("HALT", Category.Other),
        ("MOV", Category.Other),
        ("LUI", Category.Other),
        ("MUL", Category.IntegerArithmetic),
        ("DIV", Category.IntegerArithmetic),
        ("BEQ", Category.Jump),
        ("CALL", Category.Jump),
        ("RET", Category.Jump),
        ("J", Category.Jump),
    ])
    def test_table(self, mnemonic, cat):
        assert category_of(mnemonic) is cat

    def test_total_over_mnemonics(self):
        for m, op in isa.OPS.items():
            assert category_of(m) in set(Category)
            assert category_of(m.lower()) is op.category

    def test_fpu_arithmetic_is_add_sub_mul_only(self):
        members = {m for m, op in isa.OPS.items() if op.category is Category.FpuArithmetic}
        assert members == {"FADD.S", "FSUB.S", "FMUL.S", "FADD.D", "FSUB.D", "FMUL.D"}

    def test_every_category_populated(self):
        assert {op.category for op in isa.OPS.values()} == set(Category)

    def test_unknown(self):
        with pytest.raises(UnknownMnemonic):
            category_of("FROB")

    def test_overrides(self, tmp_path):
        p = tmp_path / "alias.json"
        p.write_text('{"mov": "IntegerArithmetic"}')
        ov = isa.load_category_overrides(p)
        assert category_of("MOV", ov) is Category.IntegerArithmetic
        assert category_of("ADD", ov) is Category.IntegerArithmetic
        assert isa.category_table(ov)[isa.OPS["MOV"].opcode] == Category.IntegerArithmetic

    def test_category_independent_of_operands(self):
        rng = random.Random(3)
        for _ in range(500):
            i = random_instruction(rng)
            assert i.category is isa.OPS[i.mnemonic].category


class TestDecode:
    def test_nop(self):
        i = decode(encode(Instruction("NOP")))
        assert i.mnemonic == "NOP" and i.category is Category.Nop
        assert decode(0) == Instruction("NOP")

    def test_fdiv(self):
        i = decode(encode(Instruction("FDIV", rd=1, rs1=2, rs2=3)))
        assert i.mnemonic == "FDIV.D" and i.category is Category.FpuDivide

    def test_all_ones_illegal(self):
        with pytest.raises(IllegalInstruction):
            decode(0xFFFFFFFF)

    def test_reserved_bits_illegal(self):
        with pytest.raises(IllegalInstruction):
            decode(1)  # NOP with a stray low bit
        add = int(encode(Instruction("ADD", 1, 2, 3)))
        with pytest.raises(IllegalInstruction):
            decode(add | 1)

    def test_undefined_opcodes(self):
        for opc in range(64):
            if opc not in isa.OPS_BY_OPCODE:
                with pytest.raises(IllegalInstruction):
                    decode(opc << 26)

    def test_fields(self):
        w = int(encode(Instruction("ADDI", rd=1, rs1=2, imm=-5)))
        assert w >> 26 == isa.OPS["ADDI"].opcode
        assert (w >> 21) & 31 == 1 and (w >> 16) & 31 == 2
        assert w & 0xFFFF == 0xFFFB

    def test_forms(self):
        assert Instruction("ADD").encoding_form is Form.RegReg
        assert Instruction("ADDI").encoding_form is Form.RegImm
        assert Instruction("BEQ").encoding_form is Form.Branch
        assert Instruction("LD").encoding_form is Form.Mem
        assert Instruction("FADD.D").encoding_form is Form.FpOp
        assert Instruction("HALT").encoding_form is Form.Sys


class TestEncode:
    def test_add_roundtrip(self):
        w = encode(Instruction("ADD", rd=1, rs1=2, rs2=3))
        assert decode(w).mnemonic == "ADD"

    def test_immediate_overflow(self):
        with pytest.raises(EncodingOverflow):
            encode(Instruction("ADDI", rd=1, rs1=2, imm=40000))

    def test_register_overflow(self):
        with pytest.raises(EncodingOverflow):
            encode(Instruction("ADD", rd=32))

    def test_shift_range(self):
        with pytest.raises(EncodingOverflow):
            encode(Instruction("SLLI", rd=1, rs1=1, imm=32))

    def test_unused_operand_rejected(self):
        with pytest.raises(EncodingOverflow):
            encode(Instruction("NOP", rd=3))

    def test_branch_zero_displacement(self):
        i = Instruction("BEQ", rs1=1, rs2=2, imm=0)
        assert decode(encode(i)).imm == 0

    def test_displacement_extremes(self):
        for imm in (-(1 << 25), (1 << 25) - 1):
            assert decode(encode(Instruction("J", imm=imm))).imm == imm
        with pytest.raises(EncodingOverflow):
            encode(Instruction("J", imm=1 << 25))

    def test_word_range(self):
        with pytest.raises(ValueError):
            Word(1 << 32)


@given(st.integers(0, 2**32 - 1))
def test_valid_words_roundtrip(w):
    try:
        i = decode(w)
    except IllegalInstruction:
        return
    assert int(encode(i)) == w


@given(st.randoms(use_true_random=False))
def test_instruction_roundtrip(rnd):
    i = random_instruction(rnd)
    assert decode(encode(i)) == i


def test_format_parses_back():
    from mechest.assembler import parse_instruction

    rng = random.Random(11)
    for _ in range(2000):
        i = random_instruction(rng)
        head, _, rest = str(i).partition(" ")
        assert parse_instruction(head, rest) == i


def test_reference_document():
    doc = isa.isa_reference()
    for m, op in isa.OPS.items():
        assert f"| {m} | 0x{op.opcode:02x} |" in doc
        assert op.category.name in doc
