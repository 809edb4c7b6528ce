"""Mechanistic energy and time estimation for a small RISC instruction set.

Programs are assembled for the SV8-mini ISA, executed on a counting
instruction-set simulator, and priced with per-category specific
energies and times obtained by reference/test kernel differencing.
"""

from .isa import ISA_VERSION, Category, Instruction, decode, encode
from .assembler import BinaryImage, SourceUnit, assemble, disassemble, parse
from .simulator import CategoryCounts, HardwareConfig, RunResult, run
from .costmodel import CostProfile, Estimate, default_profile, estimate, load_profile, save_profile

__version__ = "0.1.0"

__all__ = [
    "ISA_VERSION", "Category", "Instruction", "decode", "encode",
    "BinaryImage", "SourceUnit", "assemble", "disassemble", "parse",
    "CategoryCounts", "HardwareConfig", "RunResult", "run",
    "CostProfile", "Estimate", "default_profile", "estimate", "load_profile", "save_profile",
    "__version__",
]
