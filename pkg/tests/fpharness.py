"""Run one FP operation over operand vectors on the simulator.

The same kernel is assembled with and without soft-float lowering, so
hardware-FP and runtime-library results can be compared bit for bit,
and both against numpy on the host.
"""

from dataclasses import replace

import numpy as np

from mechest.assembler import assemble, symbol_table
from mechest.simulator import HardwareConfig, run

CANONICAL_NAN = np.uint64(0x7FF8000000000000)

BINARY = {"FADD.D": np.add, "FSUB.D": np.subtract, "FMUL.D": np.multiply, "FDIV.D": np.divide}


def canon(x):
    x = np.asarray(x, dtype=np.float64)
    bits = x.view(np.uint64).copy()
    bits[np.isnan(x)] = CANONICAL_NAN
    return bits


def host_result(op, a_bits, b_bits):
    a = np.asarray(a_bits, dtype=np.uint64).view(np.float64)
    b = np.asarray(b_bits, dtype=np.uint64).view(np.float64)
    with np.errstate(all="ignore"):
        if op.startswith("FSQRT"):
            return canon(np.sqrt(a))
        return canon(BINARY[op](a, b))


def operand_bits(rng, n):
    """Random binary64 patterns biased toward the hard cases."""
    x = rng.integers(0, 2**64, size=n, dtype=np.uint64)
    special = np.array([0, 0x7FF, 1, 0x7FE, 1023, 1000, 1050, 2], dtype=np.uint64)
    pick = rng.random(n) < 0.3
    exps = special[rng.integers(0, len(special), size=n)]
    x = np.where(pick, (x & np.uint64(0x800FFFFFFFFFFFFF)) | (exps << np.uint64(52)), x)
    tiny = rng.random(n) < 0.1
    return np.where(tiny, x & np.uint64(0x800000000000FFFF), x)


def operand_pairs(rng, n):
    a = operand_bits(rng, n)
    b = operand_bits(rng, n)
    k = n // 6
    # near-cancellation and exact negation pairs
    b[:k] = a[:k] ^ rng.integers(0, 16, size=k, dtype=np.uint64)
    b[k:2 * k] = a[k:2 * k] ^ np.uint64(1 << 63)
    return a, b


def fp_kernel(op, n):
    body = f"{op} f3, f1" if op.startswith("FSQRT") else f"{op} f3, f1, f2"
    return f"""
.text
.entry main
main:
    LA r1, xs
    LA r2, ys
    LA r3, out
    LI r4, {n}
loop:
    FLD f1, 0(r1)
    FLD f2, 0(r2)
    {body}
    FST f3, 0(r3)
    ADDI r1, r1, 8
    ADDI r2, r2, 8
    ADDI r3, r3, 8
    ADDI r4, r4, -1
    BNE r4, r0, loop
    HALT
.data
.align 8
xs: .space {8 * n}
ys: .space {8 * n}
out: .space {8 * n}
"""


def run_fp_op(op, a_bits, b_bits, soft):
    n = len(a_bits)
    text = fp_kernel(op, n)
    img = assemble(text, soft_float=soft)
    sym = symbol_table(text, soft_float=soft)
    data = bytearray(img.data)
    base = img.data_base
    data[sym["xs"] - base:sym["xs"] - base + 8 * n] = np.asarray(a_bits, dtype=">u8").tobytes()
    data[sym["ys"] - base:sym["ys"] - base + 8 * n] = np.asarray(b_bits, dtype=">u8").tobytes()
    img = replace(img, data=bytes(data))
    cfg = HardwareConfig("x", fpu_present=not soft)
    res = run(img, cfg)
    raw = res.final.read_bytes(sym["out"], 8 * n)
    return np.frombuffer(raw, dtype=">u8").astype(np.uint64), res
