import struct

import pytest
from hypothesis import given, settings, strategies as st

from mechest.assembler import (
    DATA_BASE,
    TEXT_BASE,
    BinaryImage,
    assemble,
    disassemble,
    parse,
    symbol_table,
)
from mechest.calibration import KernelPairSpec, gen_kernel_pair
from mechest.errors import (
    AsmSyntaxError,
    BranchOutOfRange,
    DuplicateLabel,
    EncodingOverflow,
    IllegalInstruction,
    ImageFormatError,
    UndefinedLabel,
)
from mechest.isa import FP_CATEGORIES, Category, Instruction, decode, encode

from conftest import program


def test_halt_only():
    img = assemble("HALT\n")
    assert img.text == [int(encode(Instruction("HALT")))]
    assert img.entry_point == TEXT_BASE == img.text_base


def test_entry_label():
    img = assemble(".text\nNOP\n.entry start\nstart: HALT\n")
    assert img.entry_point == TEXT_BASE + 4


def test_forward_and_backward_branches():
    img = assemble("top: BEQ r1, r2, done\nJ top\ndone: HALT\n")
    ins = img.decoded()
    assert ins[0].imm == 2       # relative to the branch itself
    assert ins[1].imm == -1


def test_numeric_branch_displacement():
    assert assemble("BEQ r0, r0, 1\nHALT\n").decoded()[0].imm == 1


def test_register_aliases():
    i = assemble("ADD sp, ra, zero\n").decoded()[0]
    assert (i.rd, i.rs1, i.rs2) == (29, 31, 0)


def test_case_insensitive_mnemonics_case_sensitive_labels():
    assert assemble("add r1, r2, r3\n").decoded()[0].mnemonic == "ADD"
    with pytest.raises(UndefinedLabel):
        assemble("Loop: J loop\n")


def test_comments_and_multiple_labels():
    src = parse("a: b: ADD r1, r2, r3 ; note\n; only a comment\n")
    assert src.labels == ["a", "b"]
    assert src.lines[1].comment == "note"
    sym = symbol_table(src)
    assert sym["a"] == sym["b"] == TEXT_BASE


@pytest.mark.parametrize("value, words", [
    (5, ["ADDI"]),
    (-1, ["ADDI"]),
    (0x12340000, ["LUI"]),
    (0x12345678, ["LUI", "ADDI"]),
    (1_000_000, ["LUI", "ADDI"]),
    (0xFFFF8000, ["ADDI"]),
])
def test_li_expansion(value, words, fpu):
    from conftest import run_text

    img = assemble(f"LI r5, {value}\nHALT\n")
    assert [i.mnemonic for i in img.decoded()[:-1]] == words
    r = run_text(f"LI r5, {value}\nHALT\n")
    assert r.final.int_regs[5] == value & 0xFFFFFFFF


def test_la_and_hi_lo():
    text = program("LA r1, buf", "LUI r2, %hi(buf)", "ADDI r2, r2, %lo(buf)",
                   data="pad: .space 40000\nbuf: .word 7")
    from conftest import run_text

    r = run_text(text)
    addr = symbol_table(text)["buf"]
    assert addr == DATA_BASE + 40000
    assert r.final.int_regs[1] == r.final.int_regs[2] == addr


def test_data_directives():
    img = assemble(".data\nw: .word 1, -1, w\nb: .byte 1, 255\n.align 8\nd: .double 1.5, 0x1.8p1\ns: .space 3\n")
    d = img.data
    assert d[:12] == struct.pack(">IiI", 1, -1, DATA_BASE)
    assert d[12:14] == b"\x01\xff"
    assert d[16:32] == struct.pack(">dd", 1.5, 3.0)
    assert len(d) == 35


def test_word_directive_aligns():
    img = assemble(".data\n.byte 1\n.word 2\n")
    assert img.data == b"\x01\x00\x00\x00\x00\x00\x00\x02"


@pytest.mark.parametrize("text, exc", [
    ("FOO r1\n", Exception),
    ("ADD r1, r2\n", AsmSyntaxError),
    ("ADD r1, r2, r40\n", AsmSyntaxError),
    ("J nowhere\n", UndefinedLabel),
    ("x: NOP\nx: NOP\n", DuplicateLabel),
    ("ADDI r1, r2, 40000\n", EncodingOverflow),
    (".data\n.double nope\n", AsmSyntaxError),
    (".bogus 1\n", AsmSyntaxError),
])
def test_errors(text, exc):
    with pytest.raises(exc):
        assemble(text)


def test_error_line_numbers():
    with pytest.raises(AsmSyntaxError) as info:
        assemble("NOP\nNOP\nADD r1\n")
    assert info.value.line == 3


def test_branch_out_of_range():
    with pytest.raises(BranchOutOfRange):
        assemble("BEQ r0, r0, 40000\nHALT\n")
    text = "BEQ r0, r0, far\n" + "NOP\n" * 33000 + "far: HALT\n"
    with pytest.raises(BranchOutOfRange):
        assemble(text)


class TestImage:
    def test_bytes_roundtrip(self, tmp_path):
        img = assemble(program("LA r1, v", "LD r2, 0(r1)", data="v: .word 9"))
        blob = img.to_bytes()
        assert blob[:4] == b"SV8M"
        magic, version, entry, tb, tl, db, dl = struct.unpack_from("<4s6I", blob)
        assert (version, entry, tb, tl, db, dl) == (1, TEXT_BASE, TEXT_BASE, 4 * len(img.text), DATA_BASE, 4)
        assert BinaryImage.from_bytes(blob) == img
        img.save(tmp_path / "a.bin")
        assert BinaryImage.load(tmp_path / "a.bin").content_hash() == img.content_hash()

    @pytest.mark.parametrize("mutate", [
        lambda b: b"XXXX" + b[4:],
        lambda b: b[:-1],
        lambda b: b[:10],
    ])
    def test_bad_blobs(self, mutate):
        blob = assemble("HALT\n").to_bytes()
        with pytest.raises(ImageFormatError):
            BinaryImage.from_bytes(mutate(blob))

    def test_invariants(self):
        with pytest.raises(ImageFormatError):
            BinaryImage(TEXT_BASE + 8, TEXT_BASE, [0], DATA_BASE, b"")
        with pytest.raises(ImageFormatError):
            BinaryImage(TEXT_BASE, TEXT_BASE, [0, 0], TEXT_BASE + 4, b"1234")


class TestDisassemble:
    def test_halt(self):
        src = disassemble(assemble("HALT\n"))
        stmts = [ln.statement for ln in src.lines if ln.statement and not ln.statement.startswith(".")]
        assert stmts == ["HALT"]

    def test_fixpoint_on_test_kernel(self):
        pair = gen_kernel_pair(KernelPairSpec.standard(Category.MemoryLoad, loop_count=1000))
        img = assemble(pair.test)
        again = assemble(disassemble(img))
        assert again.text == img.text
        assert again.entry_point == img.entry_point
        assert again.data == img.data

    def test_illegal_word_reports_address(self):
        img = BinaryImage(TEXT_BASE, TEXT_BASE, [0, 0xFFFFFFFF], DATA_BASE, b"")
        with pytest.raises(IllegalInstruction) as info:
            disassemble(img)
        assert info.value.address == TEXT_BASE + 4

    def test_fixpoint_soft_float(self):
        text = program("LA r1, v", "FLD f1, 0(r1)", "FSQRT.D f2, f1", "FST f2, 8(r1)",
                       data=".align 8\nv: .double 2.0, 0.0")
        img = assemble(text, soft_float=True)
        assert assemble(disassemble(img)).text == img.text


class TestSoftFloatOption:
    def test_fadd_lowered(self):
        img = assemble(program("FADD f1, f2, f3"), soft_float=True)
        cats = [i.category for i in img.decoded()]
        assert not FP_CATEGORIES & set(cats)
        assert not any(i.info.uses_fp_regs for i in img.decoded())

    def test_no_runtime_without_fp(self):
        text = program("ADD r1, r2, r3")
        assert assemble(text, soft_float=True).text == assemble(text).text

    def test_runtime_label_clash(self):
        with pytest.raises(DuplicateLabel):
            assemble("__softfp_add64: FADD f1, f2, f3\nHALT\n", soft_float=True)


_MNEMONICS = ["ADD", "SUB", "XOR", "ADDI", "SLLI", "LD", "ST", "MOV", "LUI", "NOP",
              "FADD.D", "FMUL.D", "FDIV.D", "FSQRT.D", "FMOV.D", "FLD", "FST", "BEQ", "J"]


@st.composite
def sources(draw):
    n = draw(st.integers(1, 30))
    lines = []
    for k in range(n):
        m = draw(st.sampled_from(_MNEMONICS))
        r = lambda: draw(st.integers(0, 31))
        if m in ("ADD", "SUB", "XOR"):
            lines.append(f"{m} r{r()}, r{r()}, r{r()}")
        elif m == "ADDI":
            lines.append(f"ADDI r{r()}, r{r()}, {draw(st.integers(-32768, 32767))}")
        elif m == "SLLI":
            lines.append(f"SLLI r{r()}, r{r()}, {draw(st.integers(0, 31))}")
        elif m in ("LD", "ST"):
            lines.append(f"{m} r{r()}, {4 * draw(st.integers(-100, 100))}(r{r()})")
        elif m in ("FLD", "FST"):
            lines.append(f"{m} f{r()}, {8 * draw(st.integers(-100, 100))}(r{draw(st.integers(1, 31))})")
        elif m == "MOV":
            lines.append(f"MOV r{r()}, r{r()}")
        elif m == "LUI":
            lines.append(f"LUI r{r()}, {draw(st.integers(-32768, 32767))}")
        elif m == "NOP":
            lines.append("NOP")
        elif m in ("FADD.D", "FMUL.D", "FDIV.D"):
            lines.append(f"{m} f{r()}, f{r()}, f{r()}")
        elif m in ("FSQRT.D", "FMOV.D"):
            lines.append(f"{m} f{r()}, f{r()}")
        elif m == "BEQ":
            lines.append(f"BEQ r{r()}, r{r()}, L{draw(st.integers(0, n))}")
        else:
            lines.append(f"J L{draw(st.integers(0, n))}")
    out = [f"L{k}: {s}" for k, s in enumerate(lines)] + [f"L{n}: HALT"]
    return "\n".join(out) + "\n"


@settings(max_examples=60, deadline=None)
@given(sources(), st.booleans())
def test_assemble_disassemble_fixpoint(text, soft):
    img = assemble(text, soft_float=soft)
    again = assemble(disassemble(img), soft_float=soft)
    assert again.text == img.text and again.entry_point == img.entry_point


@settings(max_examples=60, deadline=None)
@given(sources())
def test_soft_float_purity(text):
    img = assemble(text, soft_float=True)
    for w in img.text:
        i = decode(w)
        assert i.category not in FP_CATEGORIES
        assert not i.info.uses_fp_regs
