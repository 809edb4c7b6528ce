"""Soft-float lowering and the integer-only binary64 runtime library.

Under soft-float the FP register file lives in memory: register ``fK``
occupies the two big-endian words at ``SOFTFP_BANK + 8*K``.  Every
instruction touching FP registers is rewritten into integer loads,
stores and a call into the runtime library.

Calling convention for the ``__softfp_*`` routines: operands in
r8:r9 and r10:r11 (high word first), result in r8:r9, r12..r15 are
clobbered, return address in r31.  All other registers are preserved.

The routines follow the structure of Berkeley SoftFloat (round-pack with
a jam bit, add/sub magnitudes split by exponent difference) but use
plain restoring algorithms for division and square root.  Every NaN
result is the canonical quiet NaN, matching the simulator's FPU.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .assembler import SourceUnit, parse
from .errors import EncodingOverflow, NoRule
from .isa import FP_CATEGORIES, Instruction, op_info

SOFTFP_BANK = 0x0800
FP_MNEMONICS = ("FADD.S", "FSUB.S", "FMUL.S", "FDIV.S", "FSQRT.S",
                "FADD.D", "FSUB.D", "FMUL.D", "FDIV.D", "FSQRT.D",
                "FMOV.D", "FLD", "FST")
ROUTINES = ("__softfp_add64", "__softfp_sub64", "__softfp_mul64",
            "__softfp_div64", "__softfp_sqrt64", "__softfp_round32")


@dataclass(frozen=True)
class SymbolicCall(Instruction):
    """A CALL whose displacement is resolved by the assembler."""

    target: str = ""


@dataclass(frozen=True)
class LoweringRule:
    callee: str | None
    arity: int
    narrow: bool = False  # re-round the double result to single precision
    arg_regs: tuple[str, ...] = ("r8:r9", "r10:r11")
    result_regs: str = "r8:r9"
    clobbers: tuple[int, ...] = (8, 9, 10, 11, 12, 13, 14, 15, 31)


RULES: dict[str, LoweringRule] = {
    "FADD.D": LoweringRule("__softfp_add64", 2),
    "FSUB.D": LoweringRule("__softfp_sub64", 2),
    "FMUL.D": LoweringRule("__softfp_mul64", 2),
    "FDIV.D": LoweringRule("__softfp_div64", 2),
    "FSQRT.D": LoweringRule("__softfp_sqrt64", 1),
    "FADD.S": LoweringRule("__softfp_add64", 2, narrow=True),
    "FSUB.S": LoweringRule("__softfp_sub64", 2, narrow=True),
    "FMUL.S": LoweringRule("__softfp_mul64", 2, narrow=True),
    "FDIV.S": LoweringRule("__softfp_div64", 2, narrow=True),
    "FSQRT.S": LoweringRule("__softfp_sqrt64", 1, narrow=True),
    # pure data movement: no callee, FP registers become memory words
    "FMOV.D": LoweringRule(None, 1, clobbers=(12, 13, 14)),
    "FLD": LoweringRule(None, 1, clobbers=(12, 13, 14)),
    "FST": LoweringRule(None, 1, clobbers=(12, 13, 14)),
}


def bank_offset(freg: int) -> int:
    return SOFTFP_BANK + 8 * freg


def _ld(rd: int, off: int, base: int = 0) -> Instruction:
    return Instruction("LD", rd=rd, rs1=base, imm=off)


def _st(rs: int, off: int, base: int = 0) -> Instruction:
    return Instruction("ST", rs2=rs, rs1=base, imm=off)


def _check_offset(off: int) -> int:
    if not -0x8000 <= off <= 0x7FFF:
        raise EncodingOverflow(f"offset {off} exceeds 16-bit range after lowering")
    return off


def lower(instr: Instruction) -> list[Instruction]:
    """Replace one FP-register instruction by an integer-only sequence."""
    rule = RULES.get(instr.mnemonic)
    if rule is None:
        if instr.category in FP_CATEGORIES:
            raise NoRule(instr.mnemonic)
        raise ValueError(f"{instr.mnemonic} does not touch FP registers; nothing to lower")
    m = instr.mnemonic
    if m in ("FMOV.D", "FLD", "FST"):
        base = instr.rs1 if m != "FMOV.D" else 0
        t1, t2 = [r for r in (12, 13, 14) if r != base][:2]
        if m == "FMOV.D":
            src, dst = bank_offset(instr.rs1), bank_offset(instr.rd)
            return [_ld(t1, src), _ld(t2, src + 4), _st(t1, dst), _st(t2, dst + 4)]
        off = instr.imm
        if m == "FLD":
            dst = bank_offset(instr.rd)
            return [_ld(t1, off, base), _ld(t2, _check_offset(off + 4), base),
                    _st(t1, dst), _st(t2, dst + 4)]
        src = bank_offset(instr.rs2)
        return [_ld(t1, src), _ld(t2, src + 4),
                _st(t1, off, base), _st(t2, _check_offset(off + 4), base)]
    a = bank_offset(instr.rs1)
    seq = [_ld(8, a), _ld(9, a + 4)]
    if rule.arity == 2:
        b = bank_offset(instr.rs2)
        seq += [_ld(10, b), _ld(11, b + 4)]
    seq.append(SymbolicCall("CALL", target=rule.callee))
    if rule.narrow:
        seq.append(SymbolicCall("CALL", target="__softfp_round32"))
    d = bank_offset(instr.rd)
    seq += [_st(8, d), _st(9, d + 4)]
    for i in seq:
        if i.category in FP_CATEGORIES or op_info(i.mnemonic).uses_fp_regs:
            raise AssertionError("lowering produced an FP instruction")
    return seq


# ---------------------------------------------------------------------------
# runtime library generator
# ---------------------------------------------------------------------------

class _Asm:
    """Tiny macro assembler producing SV8-mini text.

    64-bit quantities are (hi, lo) register-name pairs.
    """

    def __init__(self):
        self.lines: list[str] = []
        self._n = 0

    def fresh(self, stem: str = "L") -> str:
        self._n += 1
        return f"__sf_{stem}{self._n}"

    def __call__(self, stmt: str) -> None:
        self.lines.append("    " + stmt)

    def label(self, name: str) -> None:
        self.lines.append(f"{name}:")

    def comment(self, text: str) -> None:
        self.lines.append(f"; {text}")

    # -- 64-bit helpers ---------------------------------------------------
    def mov64(self, d, a):
        self(f"MOV {d[0]}, {a[0]}")
        self(f"MOV {d[1]}, {a[1]}")

    def zero64(self, d):
        self(f"MOV {d[0]}, r0")
        self(f"MOV {d[1]}, r0")

    def add64(self, d, a, b, t):
        # d may alias a or b; t is scratch
        self(f"ADD {t}, {a[1]}, {b[1]}")
        self(f"SLTU {d[1]}, {t}, {b[1]}")
        self(f"ADD {d[0]}, {a[0]}, {b[0]}")
        self(f"ADD {d[0]}, {d[0]}, {d[1]}")
        self(f"MOV {d[1]}, {t}")

    def sub64(self, d, a, b, t):
        self(f"SLTU {t}, {a[1]}, {b[1]}")
        self(f"SUB {d[1]}, {a[1]}, {b[1]}")
        self(f"SUB {d[0]}, {a[0]}, {b[0]}")
        self(f"SUB {d[0]}, {d[0]}, {t}")

    def neg64(self, d, t):
        self(f"SLTU {t}, r0, {d[1]}")
        self(f"SUB {d[1]}, r0, {d[1]}")
        self(f"SUB {d[0]}, r0, {d[0]}")
        self(f"SUB {d[0]}, {d[0]}, {t}")

    def shl64c(self, d, n, t):
        if n == 0:
            return
        if n >= 32:
            self(f"SLLI {d[0]}, {d[1]}, {n - 32}")
            self(f"MOV {d[1]}, r0")
            return
        self(f"SRLI {t}, {d[1]}, {32 - n}")
        self(f"SLLI {d[0]}, {d[0]}, {n}")
        self(f"OR {d[0]}, {d[0]}, {t}")
        self(f"SLLI {d[1]}, {d[1]}, {n}")

    def shr64c(self, d, n, t):
        if n == 0:
            return
        if n >= 32:
            self(f"SRLI {d[1]}, {d[0]}, {n - 32}")
            self(f"MOV {d[0]}, r0")
            return
        self(f"SLLI {t}, {d[0]}, {32 - n}")
        self(f"SRLI {d[1]}, {d[1]}, {n}")
        self(f"OR {d[1]}, {d[1]}, {t}")
        self(f"SRLI {d[0]}, {d[0]}, {n}")

    def shl64v(self, d, n, t1, t2):
        """d <<= n for n in 0..63 (register)."""
        done, lt32 = self.fresh("shl"), self.fresh("shl")
        self(f"BEQ {n}, r0, {done}")
        self(f"SLTIU {t1}, {n}, 32")
        self(f"BNE {t1}, r0, {lt32}")
        self(f"ADDI {t1}, {n}, -32")
        self(f"SLL {d[0]}, {d[1]}, {t1}")
        self(f"MOV {d[1]}, r0")
        self(f"J {done}")
        self.label(lt32)
        self(f"SUB {t1}, r0, {n}")
        self(f"SRL {t2}, {d[1]}, {t1}")
        self(f"SLL {d[0]}, {d[0]}, {n}")
        self(f"OR {d[0]}, {d[0]}, {t2}")
        self(f"SLL {d[1]}, {d[1]}, {n}")
        self.label(done)

    def shr64v(self, d, n, t1, t2):
        """d >>= n (logical) for n in 0..63 (register)."""
        done, lt32 = self.fresh("shr"), self.fresh("shr")
        self(f"BEQ {n}, r0, {done}")
        self(f"SLTIU {t1}, {n}, 32")
        self(f"BNE {t1}, r0, {lt32}")
        self(f"ADDI {t1}, {n}, -32")
        self(f"SRL {d[1]}, {d[0]}, {t1}")
        self(f"MOV {d[0]}, r0")
        self(f"J {done}")
        self.label(lt32)
        self(f"SUB {t1}, r0, {n}")
        self(f"SLL {t2}, {d[0]}, {t1}")
        self(f"SRL {d[1]}, {d[1]}, {n}")
        self(f"OR {d[1]}, {d[1]}, {t2}")
        self(f"SRL {d[0]}, {d[0]}, {n}")
        self.label(done)

    def srjam64v(self, d, n, t1, t2, t3):
        """Shift right by n >= 0, OR-ing every lost bit into bit 0."""
        done, lt64, lt32 = self.fresh("jam"), self.fresh("jam"), self.fresh("jam")
        self(f"BEQ {n}, r0, {done}")
        self(f"SLTIU {t1}, {n}, 64")
        self(f"BNE {t1}, r0, {lt64}")
        self(f"OR {t1}, {d[0]}, {d[1]}")
        self(f"SLTU {d[1]}, r0, {t1}")
        self(f"MOV {d[0]}, r0")
        self(f"J {done}")
        self.label(lt64)
        self(f"SLTIU {t1}, {n}, 32")
        self(f"BNE {t1}, r0, {lt32}")
        self(f"ADDI {t1}, {n}, -32")
        self(f"SRL {t2}, {d[0]}, {t1}")
        self(f"SLL {t3}, {t2}, {t1}")
        self(f"XOR {t3}, {t3}, {d[0]}")
        self(f"OR {t3}, {t3}, {d[1]}")
        self(f"SLTU {t3}, r0, {t3}")
        self(f"OR {d[1]}, {t2}, {t3}")
        self(f"MOV {d[0]}, r0")
        self(f"J {done}")
        self.label(lt32)
        self(f"SUB {t1}, r0, {n}")
        self(f"SLL {t2}, {d[1]}, {t1}")
        self(f"SLTU {t2}, r0, {t2}")
        self(f"SRL {d[1]}, {d[1]}, {n}")
        self(f"SLL {t3}, {d[0]}, {t1}")
        self(f"OR {d[1]}, {d[1]}, {t3}")
        self(f"SRL {d[0]}, {d[0]}, {n}")
        self(f"OR {d[1]}, {d[1]}, {t2}")
        self.label(done)

    def clz32(self, out, x, t1, t2):
        """Leading zeros of a nonzero 32-bit register."""
        self(f"MOV {t1}, {x}")
        self(f"MOV {out}, r0")
        for width in (16, 8, 4, 2, 1):
            skip = self.fresh("clz")
            self(f"SRLI {t2}, {t1}, {32 - width}")
            self(f"BNE {t2}, r0, {skip}")
            self(f"ADDI {out}, {out}, {width}")
            if width > 1:
                self(f"SLLI {t1}, {t1}, {width}")
            self.label(skip)

    def clz64(self, out, d, t1, t2):
        """Leading zeros of a nonzero 64-bit pair."""
        low, done = self.fresh("clz"), self.fresh("clz")
        self(f"BEQ {d[0]}, r0, {low}")
        self.clz32(out, d[0], t1, t2)
        self(f"J {done}")
        self.label(low)
        self.clz32(out, d[1], t1, t2)
        self(f"ADDI {out}, {out}, 32")
        self.label(done)

    def bltu64(self, a, b, target):
        """Branch to target if a < b (unsigned 64-bit)."""
        no = self.fresh("cmp")
        self(f"BLTU {a[0]}, {b[0]}, {target}")
        self(f"BNE {a[0]}, {b[0]}, {no}")
        self(f"BLTU {a[1]}, {b[1]}, {target}")
        self.label(no)

    def nz64(self, out, d):
        self(f"OR {out}, {d[0]}, {d[1]}")

    def norm_subnormal(self, frac, exp, t1, t2, t3):
        """frac <<= clz64(frac) - 11; exp = 1 - shift."""
        self.clz64(t3, frac, t1, t2)
        self(f"ADDI {t3}, {t3}, -11")
        self(f"ADDI {exp}, r0, 1")
        self(f"SUB {exp}, {exp}, {t3}")
        self.shl64v(frac, t3, t1, t2)


# register assignment shared by all routines
A_SIGN, A_EXP, A_FRAC = "r16", "r17", ("r20", "r21")
B_SIGN, B_EXP, B_FRAC = "r18", "r19", ("r22", "r23")
Z_SIGN, Z_EXP, Z_SIG = "r24", "r25", ("r26", "r27")
_SAVED = ["r16", "r17", "r18", "r19", "r20", "r21", "r22", "r23",
          "r24", "r25", "r26", "r27", "r28", "r30", "r31"]
_FRAME = 4 * len(_SAVED)


def _prologue(a: _Asm) -> None:
    a(f"ADDI sp, sp, -{_FRAME}")
    for i, r in enumerate(_SAVED):
        a(f"ST {r}, {4 * i}(sp)")


def _unpack(a: _Asm, hi: str, lo: str, sign: str, exp: str, frac) -> None:
    a(f"SRLI {sign}, {hi}, 31")
    a(f"SRLI {exp}, {hi}, 20")
    a(f"ANDI {exp}, {exp}, 0x7FF")
    a("LI r15, 0x000FFFFF")
    a(f"AND {frac[0]}, {hi}, r15")
    a(f"MOV {frac[1]}, {lo}")


def _shared_tails(a: _Asm) -> None:
    a.comment("shared exits: result in r8:r9")
    a.label("__sf_epilogue")
    for i, r in enumerate(_SAVED):
        a(f"LD {r}, {4 * i}(sp)")
    a(f"ADDI sp, sp, {_FRAME}")
    a("RET")
    a.label("__sf_ret_nan")
    a("LI r8, 0x7FF80000")
    a("MOV r9, r0")
    a("J __sf_epilogue")
    a.label("__sf_ret_inf")
    a(f"SLLI r8, {Z_SIGN}, 31")
    a("LI r12, 0x7FF00000")
    a("OR r8, r8, r12")
    a("MOV r9, r0")
    a("J __sf_epilogue")
    a.label("__sf_ret_zero")
    a(f"SLLI r8, {Z_SIGN}, 31")
    a("MOV r9, r0")
    a("J __sf_epilogue")

    a.comment("pack: (sign << 63) + (exp << 52) + sig")
    a.label("__sf_pack")
    a(f"SLLI r8, {Z_SIGN}, 31")
    a(f"SLLI r12, {Z_EXP}, 20")
    a("ADD r8, r8, r12")
    a(f"ADD r8, r8, {Z_SIG[0]}")
    a(f"MOV r9, {Z_SIG[1]}")
    a("J __sf_epilogue")

    a.comment("round to nearest even and pack; sig has its leading one at bit 62")
    a.label("__sf_round_pack")
    sig = Z_SIG
    a(f"ANDI r12, {sig[1]}, 0x3FF")
    a("LI r13, 0x7FD")
    a(f"BLTU {Z_EXP}, r13, __sf_rp_round")
    a(f"BGE {Z_EXP}, r0, __sf_rp_big")
    a(f"SUB r13, r0, {Z_EXP}")
    a.srjam64v(sig, "r13", "r14", "r15", "r28")
    a(f"MOV {Z_EXP}, r0")
    a(f"ANDI r12, {sig[1]}, 0x3FF")
    a("J __sf_rp_round")
    a.label("__sf_rp_big")
    a("LI r13, 0x7FD")
    a(f"BLT r13, {Z_EXP}, __sf_ret_inf")
    a(f"ADDI r14, {sig[1]}, 0x200")
    a(f"SLTU r15, r14, {sig[1]}")
    a(f"ADD r15, {sig[0]}, r15")
    a("LI r13, 0x80000000")
    a("BGEU r15, r13, __sf_ret_inf")
    a.label("__sf_rp_round")
    a(f"ADDI r14, {sig[1]}, 0x200")
    a(f"SLTU r15, r14, {sig[1]}")
    a(f"ADD {sig[0]}, {sig[0]}, r15")
    a(f"MOV {sig[1]}, r14")
    a.shr64c(sig, 10, "r13")
    a("ADDI r13, r0, 0x200")
    a("BNE r12, r13, __sf_rp_noties")
    a(f"ANDI {sig[1]}, {sig[1]}, -2")
    a.label("__sf_rp_noties")
    a.nz64("r13", sig)
    a("BNE r13, r0, __sf_pack")
    a(f"MOV {Z_EXP}, r0")
    a("J __sf_pack")


def _entry(a: _Asm, name: str, binary: bool) -> None:
    a.label(name)
    _prologue(a)
    _unpack(a, "r8", "r9", A_SIGN, A_EXP, A_FRAC)
    if binary:
        _unpack(a, "r10", "r11", B_SIGN, B_EXP, B_FRAC)


def _add_sub(a: _Asm) -> None:
    fa, fb = A_FRAC, B_FRAC
    _entry(a, "__softfp_add64", True)
    a(f"MOV {Z_SIGN}, {A_SIGN}")
    a(f"BEQ {A_SIGN}, {B_SIGN}, __sf_addmags")
    a("J __sf_submags")
    _entry(a, "__softfp_sub64", True)
    a(f"MOV {Z_SIGN}, {A_SIGN}")
    a(f"BEQ {A_SIGN}, {B_SIGN}, __sf_submags")
    a("J __sf_addmags")

    a.comment("magnitude addition")
    a.label("__sf_addmags")
    a(f"SUB r12, {A_EXP}, {B_EXP}")
    a("BNE r12, r0, __sf_am_diff")
    a(f"BNE {A_EXP}, r0, __sf_am_eq_norm")
    # both subnormal or zero: bits(A) + fracB, sign bit carried along
    a(f"SLLI r8, {A_SIGN}, 31")
    a(f"OR r8, r8, {fa[0]}")
    a(f"MOV r9, {fa[1]}")
    a.add64(("r8", "r9"), ("r8", "r9"), fb, "r13")
    a("J __sf_epilogue")
    a.label("__sf_am_eq_norm")
    a("LI r13, 0x7FF")
    a(f"BNE {A_EXP}, r13, __sf_am_eq_fin")
    a.nz64("r13", fa)
    a("BNE r13, r0, __sf_ret_nan")
    a.nz64("r13", fb)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_am_eq_fin")
    a(f"MOV {Z_EXP}, {A_EXP}")
    a.add64(Z_SIG, fa, fb, "r13")
    a("LI r13, 0x00200000")
    a(f"ADD {Z_SIG[0]}, {Z_SIG[0]}, r13")
    a.shl64c(Z_SIG, 9, "r13")
    a("J __sf_round_pack")
    a.label("__sf_am_diff")
    a.shl64c(fa, 9, "r13")
    a.shl64c(fb, 9, "r13")
    a("BGE r12, r0, __sf_am_pos")
    a("LI r13, 0x7FF")
    a(f"BNE {B_EXP}, r13, __sf_am_neg_fin")
    a.nz64("r13", fb)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_am_neg_fin")
    a(f"MOV {Z_EXP}, {B_EXP}")
    a(f"BEQ {A_EXP}, r0, __sf_am_neg_sub")
    a("LI r13, 0x20000000")
    a(f"ADD {fa[0]}, {fa[0]}, r13")
    a("J __sf_am_neg_shift")
    a.label("__sf_am_neg_sub")
    a.shl64c(fa, 1, "r13")
    a.label("__sf_am_neg_shift")
    a("SUB r12, r0, r12")
    a.srjam64v(fa, "r12", "r13", "r14", "r15")
    a("J __sf_am_sum")
    a.label("__sf_am_pos")
    a("LI r13, 0x7FF")
    a(f"BNE {A_EXP}, r13, __sf_am_pos_fin")
    a.nz64("r13", fa)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_am_pos_fin")
    a(f"MOV {Z_EXP}, {A_EXP}")
    a(f"BEQ {B_EXP}, r0, __sf_am_pos_sub")
    a("LI r13, 0x20000000")
    a(f"ADD {fb[0]}, {fb[0]}, r13")
    a("J __sf_am_pos_shift")
    a.label("__sf_am_pos_sub")
    a.shl64c(fb, 1, "r13")
    a.label("__sf_am_pos_shift")
    a.srjam64v(fb, "r12", "r13", "r14", "r15")
    a.label("__sf_am_sum")
    a.add64(Z_SIG, fa, fb, "r13")
    a("LI r13, 0x20000000")
    a(f"ADD {Z_SIG[0]}, {Z_SIG[0]}, r13")
    a("LI r13, 0x40000000")
    a(f"BGEU {Z_SIG[0]}, r13, __sf_round_pack")
    a(f"ADDI {Z_EXP}, {Z_EXP}, -1")
    a.shl64c(Z_SIG, 1, "r13")
    a("J __sf_round_pack")

    a.comment("magnitude subtraction")
    a.label("__sf_submags")
    a(f"SUB r12, {A_EXP}, {B_EXP}")
    a("BNE r12, r0, __sf_sm_diff")
    a("LI r13, 0x7FF")
    a(f"BEQ {A_EXP}, r13, __sf_ret_nan")
    a.sub64(Z_SIG, fa, fb, "r13")
    a.nz64("r13", Z_SIG)
    a("BNE r13, r0, __sf_sm_nz")
    a(f"MOV {Z_SIGN}, r0")
    a("J __sf_ret_zero")
    a.label("__sf_sm_nz")
    a(f"BEQ {A_EXP}, r0, __sf_sm_e0")
    a(f"ADDI {A_EXP}, {A_EXP}, -1")
    a.label("__sf_sm_e0")
    a(f"BGE {Z_SIG[0]}, r0, __sf_sm_pos")
    a(f"XORI {Z_SIGN}, {Z_SIGN}, 1")
    a.neg64(Z_SIG, "r13")
    a.label("__sf_sm_pos")
    a.clz64("r12", Z_SIG, "r13", "r14")
    a("ADDI r12, r12, -11")
    a(f"SUB {Z_EXP}, {A_EXP}, r12")
    a(f"BGE {Z_EXP}, r0, __sf_sm_shift")
    a(f"MOV r12, {A_EXP}")
    a(f"MOV {Z_EXP}, r0")
    a.label("__sf_sm_shift")
    a.shl64v(Z_SIG, "r12", "r13", "r14")
    a("J __sf_pack")
    a.label("__sf_sm_diff")
    a.shl64c(fa, 10, "r13")
    a.shl64c(fb, 10, "r13")
    a("BGE r12, r0, __sf_sm_posd")
    a(f"XORI {Z_SIGN}, {Z_SIGN}, 1")
    a("LI r13, 0x7FF")
    a(f"BNE {B_EXP}, r13, __sf_sm_negfin")
    a.nz64("r13", fb)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_sm_negfin")
    a(f"BEQ {A_EXP}, r0, __sf_sm_na_sub")
    a("LI r13, 0x40000000")
    a(f"ADD {fa[0]}, {fa[0]}, r13")
    a("J __sf_sm_na_shift")
    a.label("__sf_sm_na_sub")
    a.shl64c(fa, 1, "r13")
    a.label("__sf_sm_na_shift")
    a("SUB r12, r0, r12")
    a.srjam64v(fa, "r12", "r13", "r14", "r15")
    a("LI r13, 0x40000000")
    a(f"OR {fb[0]}, {fb[0]}, r13")
    a(f"MOV {Z_EXP}, {B_EXP}")
    a.sub64(Z_SIG, fb, fa, "r13")
    a("J __sf_sm_norm")
    a.label("__sf_sm_posd")
    a("LI r13, 0x7FF")
    a(f"BNE {A_EXP}, r13, __sf_sm_posfin")
    a.nz64("r13", fa)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_sm_posfin")
    a(f"BEQ {B_EXP}, r0, __sf_sm_nb_sub")
    a("LI r13, 0x40000000")
    a(f"ADD {fb[0]}, {fb[0]}, r13")
    a("J __sf_sm_nb_shift")
    a.label("__sf_sm_nb_sub")
    a.shl64c(fb, 1, "r13")
    a.label("__sf_sm_nb_shift")
    a.srjam64v(fb, "r12", "r13", "r14", "r15")
    a("LI r13, 0x40000000")
    a(f"OR {fa[0]}, {fa[0]}, r13")
    a(f"MOV {Z_EXP}, {A_EXP}")
    a.sub64(Z_SIG, fa, fb, "r13")
    a.comment("normalise, then pack directly or round")
    a.label("__sf_sm_norm")
    a(f"ADDI {Z_EXP}, {Z_EXP}, -1")
    a.clz64("r12", Z_SIG, "r13", "r14")
    a("ADDI r12, r12, -1")
    a(f"SUB {Z_EXP}, {Z_EXP}, r12")
    a("SLTIU r13, r12, 10")
    a("BNE r13, r0, __sf_sm_rp")
    a("LI r13, 0x7FD")
    a(f"BGEU {Z_EXP}, r13, __sf_sm_rp")
    a("ADDI r12, r12, -10")
    a.shl64v(Z_SIG, "r12", "r13", "r14")
    a("J __sf_pack")
    a.label("__sf_sm_rp")
    a.shl64v(Z_SIG, "r12", "r13", "r14")
    a("J __sf_round_pack")


def _mul(a: _Asm) -> None:
    fa, fb = A_FRAC, B_FRAC
    _entry(a, "__softfp_mul64", True)
    a(f"XOR {Z_SIGN}, {A_SIGN}, {B_SIGN}")
    a("LI r15, 0x7FF")
    a(f"BNE {A_EXP}, r15, __sf_mul_a_fin")
    a.nz64("r13", fa)
    a("BNE r13, r0, __sf_ret_nan")
    a(f"BNE {B_EXP}, r15, __sf_mul_inf_b")
    a.nz64("r13", fb)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_mul_inf_b")
    a.nz64("r13", fb)
    a(f"OR r13, r13, {B_EXP}")
    a("BEQ r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_mul_a_fin")
    a(f"BNE {B_EXP}, r15, __sf_mul_b_fin")
    a.nz64("r13", fb)
    a("BNE r13, r0, __sf_ret_nan")
    a.nz64("r13", fa)
    a(f"OR r13, r13, {A_EXP}")
    a("BEQ r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_mul_b_fin")
    a(f"BNE {A_EXP}, r0, __sf_mul_a_norm")
    a.nz64("r13", fa)
    a("BEQ r13, r0, __sf_ret_zero")
    a.norm_subnormal(fa, A_EXP, "r13", "r14", "r15")
    a.label("__sf_mul_a_norm")
    a(f"BNE {B_EXP}, r0, __sf_mul_b_norm")
    a.nz64("r13", fb)
    a("BEQ r13, r0, __sf_ret_zero")
    a.norm_subnormal(fb, B_EXP, "r13", "r14", "r15")
    a.label("__sf_mul_b_norm")
    a(f"ADD {Z_EXP}, {A_EXP}, {B_EXP}")
    a(f"ADDI {Z_EXP}, {Z_EXP}, -1023")
    a("LI r13, 0x00100000")
    a(f"OR {fa[0]}, {fa[0]}, r13")
    a(f"OR {fb[0]}, {fb[0]}, r13")
    a.shl64c(fa, 10, "r13")
    a.shl64c(fb, 11, "r13")
    a1, a0 = fa
    b1, b0 = fb
    a.comment("128-bit product, limbs p3:p2:p1:p0")
    a(f"MUL r8, {a0}, {b0}")
    a(f"MULHU r9, {a0}, {b0}")
    a(f"MUL r10, {a0}, {b1}")
    a("ADD r9, r9, r10")
    a("SLTU r11, r9, r10")
    a(f"MUL r10, {a1}, {b0}")
    a("ADD r9, r9, r10")
    a("SLTU r10, r9, r10")
    a("ADD r11, r11, r10")
    a(f"MULHU r12, {a0}, {b1}")
    a("ADD r12, r12, r11")
    a("SLTU r13, r12, r11")
    a(f"MULHU r10, {a1}, {b0}")
    a("ADD r12, r12, r10")
    a("SLTU r10, r12, r10")
    a("ADD r13, r13, r10")
    a(f"MUL r10, {a1}, {b1}")
    a("ADD r12, r12, r10")
    a("SLTU r10, r12, r10")
    a("ADD r13, r13, r10")
    a(f"MULHU r14, {a1}, {b1}")
    a("ADD r14, r14, r13")
    a("OR r8, r8, r9")
    a("SLTU r8, r0, r8")
    a(f"MOV {Z_SIG[0]}, r14")
    a(f"OR {Z_SIG[1]}, r12, r8")
    a("LI r13, 0x40000000")
    a(f"BGEU {Z_SIG[0]}, r13, __sf_round_pack")
    a(f"ADDI {Z_EXP}, {Z_EXP}, -1")
    a.shl64c(Z_SIG, 1, "r13")
    a("J __sf_round_pack")


def _div(a: _Asm) -> None:
    fa, fb = A_FRAC, B_FRAC
    _entry(a, "__softfp_div64", True)
    a(f"XOR {Z_SIGN}, {A_SIGN}, {B_SIGN}")
    a("LI r15, 0x7FF")
    a(f"BNE {A_EXP}, r15, __sf_div_a_fin")
    a.nz64("r13", fa)
    a("BNE r13, r0, __sf_ret_nan")
    a(f"BEQ {B_EXP}, r15, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_div_a_fin")
    a(f"BNE {B_EXP}, r15, __sf_div_b_fin")
    a.nz64("r13", fb)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_zero")
    a.label("__sf_div_b_fin")
    a(f"BNE {B_EXP}, r0, __sf_div_b_norm")
    a.nz64("r13", fb)
    a("BNE r13, r0, __sf_div_b_sub")
    a.nz64("r13", fa)
    a(f"OR r13, r13, {A_EXP}")
    a("BEQ r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_div_b_sub")
    a.norm_subnormal(fb, B_EXP, "r13", "r14", "r15")
    a.label("__sf_div_b_norm")
    a(f"BNE {A_EXP}, r0, __sf_div_a_norm")
    a.nz64("r13", fa)
    a("BEQ r13, r0, __sf_ret_zero")
    a.norm_subnormal(fa, A_EXP, "r13", "r14", "r15")
    a.label("__sf_div_a_norm")
    a(f"SUB {Z_EXP}, {A_EXP}, {B_EXP}")
    a(f"ADDI {Z_EXP}, {Z_EXP}, 0x3FE")
    a("LI r13, 0x00100000")
    a(f"OR {fa[0]}, {fa[0]}, r13")
    a(f"OR {fb[0]}, {fb[0]}, r13")
    a.bltu64(fa, fb, "__sf_div_lt")
    a("J __sf_div_go")
    a.label("__sf_div_lt")
    a(f"ADDI {Z_EXP}, {Z_EXP}, -1")
    a.shl64c(fa, 1, "r13")
    a.label("__sf_div_go")
    a.comment("restoring division: 54 quotient bits, remainder in fracA")
    a.zero64(Z_SIG)
    a("ADDI r12, r0, 54")
    a.label("__sf_div_loop")
    a.shl64c(Z_SIG, 1, "r13")
    a.bltu64(fa, fb, "__sf_div_skip")
    a.sub64(fa, fa, fb, "r13")
    a(f"ORI {Z_SIG[1]}, {Z_SIG[1]}, 1")
    a.label("__sf_div_skip")
    a.shl64c(fa, 1, "r13")
    a("ADDI r12, r12, -1")
    a("BNE r12, r0, __sf_div_loop")
    a.shl64c(Z_SIG, 9, "r13")
    a.nz64("r13", fa)
    a("SLTU r13, r0, r13")
    a(f"OR {Z_SIG[1]}, {Z_SIG[1]}, r13")
    a("J __sf_round_pack")


def _sqrt(a: _Asm) -> None:
    fa = A_FRAC
    _entry(a, "__softfp_sqrt64", False)
    a(f"MOV {Z_SIGN}, r0")
    a("LI r15, 0x7FF")
    a(f"BNE {A_EXP}, r15, __sf_sqrt_fin")
    a.nz64("r13", fa)
    a("BNE r13, r0, __sf_ret_nan")
    a(f"BNE {A_SIGN}, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_sqrt_fin")
    a(f"MOV {Z_SIGN}, {A_SIGN}")
    a.nz64("r13", fa)
    a(f"OR r13, r13, {A_EXP}")
    a("BEQ r13, r0, __sf_ret_zero")
    a(f"BNE {A_SIGN}, r0, __sf_ret_nan")
    a(f"BNE {A_EXP}, r0, __sf_sqrt_norm")
    a.norm_subnormal(fa, A_EXP, "r13", "r14", "r15")
    a.label("__sf_sqrt_norm")
    a(f"ADDI {Z_EXP}, {A_EXP}, -1023")
    a(f"SRAI {Z_EXP}, {Z_EXP}, 1")
    a(f"ADDI {Z_EXP}, {Z_EXP}, 0x3FE")
    a("LI r13, 0x00100000")
    a(f"OR {fa[0]}, {fa[0]}, r13")
    a(f"ANDI r13, {A_EXP}, 1")
    a("BNE r13, r0, __sf_sqrt_even")
    a.shl64c(fa, 1, "r13")
    a.label("__sf_sqrt_even")
    a.comment("digit-by-digit square root of frac << 54: 54 result bits")
    a.shl64c(fa, 10, "r13")
    rem = ("r22", "r23")
    trial = ("r8", "r9")
    a.zero64(rem)
    a.zero64(Z_SIG)
    a("ADDI r12, r0, 54")
    a.label("__sf_sqrt_loop")
    a.shl64c(rem, 2, "r13")
    a(f"SRLI r13, {fa[0]}, 30")
    a(f"OR {rem[1]}, {rem[1]}, r13")
    a.shl64c(fa, 2, "r13")
    a.mov64(trial, Z_SIG)
    a.shl64c(trial, 2, "r13")
    a(f"ORI {trial[1]}, {trial[1]}, 1")
    a.shl64c(Z_SIG, 1, "r13")
    a.bltu64(rem, trial, "__sf_sqrt_skip")
    a.sub64(rem, rem, trial, "r13")
    a(f"ORI {Z_SIG[1]}, {Z_SIG[1]}, 1")
    a.label("__sf_sqrt_skip")
    a("ADDI r12, r12, -1")
    a("BNE r12, r0, __sf_sqrt_loop")
    a.shl64c(Z_SIG, 9, "r13")
    a.nz64("r13", rem)
    a("SLTU r13, r0, r13")
    a(f"OR {Z_SIG[1]}, {Z_SIG[1]}, r13")
    a("J __sf_round_pack")


def _round32(a: _Asm) -> None:
    """Round a binary64 to the nearest binary32 value, returned widened."""
    fa = A_FRAC
    _entry(a, "__softfp_round32", False)
    a(f"MOV {Z_SIGN}, {A_SIGN}")
    a("LI r15, 0x7FF")
    a(f"BNE {A_EXP}, r15, __sf_r32_fin")
    a.nz64("r13", fa)
    a("BNE r13, r0, __sf_ret_nan")
    a("J __sf_ret_inf")
    a.label("__sf_r32_fin")
    a(f"BEQ {A_EXP}, r0, __sf_ret_zero")
    a("LI r13, 1150")
    a(f"BLT r13, {A_EXP}, __sf_ret_inf")
    a.comment("dropped bits: 29, plus the distance below the binary32 normal range")
    a("ADDI r12, r0, 29")
    a("LI r13, 897")
    a(f"SUB r13, r13, {A_EXP}")
    a("BGE r0, r13, __sf_r32_drop")
    a("ADD r12, r12, r13")
    a.label("__sf_r32_drop")
    a("SLTIU r13, r12, 54")
    a("BEQ r13, r0, __sf_ret_zero")
    a("LI r13, 0x00100000")
    a(f"OR {fa[0]}, {fa[0]}, r13")
    half = ("r8", "r9")
    rem = ("r10", "r11")
    a.comment("half = 1 << (drop-1); rem = frac & (2*half - 1); frac >>= drop")
    a("MOV r8, r0")
    a("ADDI r9, r0, 1")
    a("ADDI r13, r12, -1")
    a.shl64v(half, "r13", "r14", "r15")
    a.mov64(rem, half)
    a.add64(rem, rem, half, "r13")
    a("ADDI r14, r0, 1")
    a(f"SLTU r13, {rem[1]}, r14")  # borrow out of the low word only when it is zero
    a(f"ADDI {rem[1]}, {rem[1]}, -1")
    a(f"SUB {rem[0]}, {rem[0]}, r13")
    a(f"AND {rem[0]}, {rem[0]}, {fa[0]}")
    a(f"AND {rem[1]}, {rem[1]}, {fa[1]}")
    a.shr64v(fa, "r12", "r13", "r14")
    a.bltu64(rem, half, "__sf_r32_keep")
    a.bltu64(half, rem, "__sf_r32_up")
    a(f"ANDI r13, {fa[1]}, 1")
    a("BEQ r13, r0, __sf_r32_keep")
    a.label("__sf_r32_up")
    a(f"ADDI {fa[1]}, {fa[1]}, 1")
    a(f"SLTIU r13, {fa[1]}, 1")
    a(f"ADD {fa[0]}, {fa[0]}, r13")
    a.label("__sf_r32_keep")
    a.shl64v(fa, "r12", "r13", "r14")
    a.nz64("r13", fa)
    a("BEQ r13, r0, __sf_ret_zero")
    a.mov64(Z_SIG, fa)
    a(f"ADDI {Z_EXP}, {A_EXP}, -1")
    a(f"SLLI r8, {Z_SIGN}, 31")
    a(f"SLLI r12, {Z_EXP}, 20")
    a("ADD r8, r8, r12")
    a(f"ADD r8, r8, {Z_SIG[0]}")
    a(f"MOV r9, {Z_SIG[1]}")
    a("SRLI r13, r8, 20")
    a("ANDI r13, r13, 0x7FF")
    a("LI r14, 1150")
    a("BLT r14, r13, __sf_ret_inf")
    a("J __sf_epilogue")


@functools.lru_cache(maxsize=1)
def runtime_library_text() -> str:
    a = _Asm()
    a.comment("soft-float runtime: IEEE-754 binary64, round to nearest even, integer instructions only")
    a.lines.append(".text")
    _add_sub(a)
    _mul(a)
    _div(a)
    _sqrt(a)
    _round32(a)
    _shared_tails(a)
    return "\n".join(a.lines) + "\n"


def runtime_library() -> SourceUnit:
    return parse(runtime_library_text(), name="<softfp runtime>")
