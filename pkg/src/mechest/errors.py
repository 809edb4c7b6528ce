"""Exception hierarchy shared by all mechest modules."""


class MechestError(Exception):
    """Base class for every error raised by the toolkit."""


# --- isa -------------------------------------------------------------------

class IllegalInstruction(MechestError):
    def __init__(self, word: int, address: int | None = None):
        self.word = word
        self.address = address
        where = f" at 0x{address:08x}" if address is not None else ""
        super().__init__(f"illegal instruction word 0x{word:08x}{where}")


class EncodingOverflow(MechestError):
    """An operand does not fit its encoding field."""


class UnknownMnemonic(MechestError):
    pass


# --- assembler -------------------------------------------------------------

class AsmError(MechestError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class AsmSyntaxError(AsmError):
    pass


class UndefinedLabel(AsmError):
    def __init__(self, name: str, line: int | None = None):
        self.name = name
        super().__init__(f"undefined label {name!r}", line)


class DuplicateLabel(AsmError):
    def __init__(self, name: str, line: int | None = None):
        self.name = name
        super().__init__(f"duplicate label {name!r}", line)


class BranchOutOfRange(AsmError):
    pass


class ImageFormatError(MechestError):
    pass


# --- simulator -------------------------------------------------------------

class ImageTooLarge(MechestError):
    pass


class MachineFault(MechestError):
    """Base for faults raised while executing an instruction."""

    def __init__(self, message: str, pc: int):
        self.pc = pc
        super().__init__(message)


class MisalignedAccess(MachineFault):
    def __init__(self, address: int, pc: int):
        self.address = address
        super().__init__(f"misaligned access to 0x{address:08x} at pc 0x{pc:08x}", pc)


class MemoryFault(MachineFault):
    def __init__(self, address: int, pc: int):
        self.address = address
        super().__init__(f"access outside memory at 0x{address:08x} (pc 0x{pc:08x})", pc)


class FpuAbsent(MachineFault):
    def __init__(self, pc: int):
        super().__init__(f"floating-point instruction at pc 0x{pc:08x} but no FPU configured", pc)


class MachineHalted(MechestError):
    pass


class BudgetExhausted(MechestError):
    """Raised by ``run`` when the instruction budget runs out; carries partial results."""

    def __init__(self, result):
        self.result = result
        super().__init__(f"instruction budget exhausted after {result.executed} instructions")


# --- softfloat -------------------------------------------------------------

class NoRule(MechestError):
    pass


# --- costmodel -------------------------------------------------------------

class SchemaError(MechestError):
    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"profile schema error in {field!r}" + (f": {message}" if message else ""))


class NegativeCost(MechestError):
    def __init__(self, category):
        self.category = category
        super().__init__(f"negative cost for category {category}")


# --- calibration -----------------------------------------------------------

class UnsupportedCategory(MechestError):
    pass


class NegativeDelta(MechestError):
    def __init__(self, category, quantity: str, delta: float):
        self.category = category
        self.quantity = quantity
        self.delta = delta
        super().__init__(f"{quantity} of test kernel below reference for {category} (delta {delta:g})")


class IncompleteCoverage(MechestError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("no kernel spec for: " + ", ".join(str(c) for c in self.missing))


class MeasurementUnavailable(MechestError):
    pass


# --- evaluation ------------------------------------------------------------

class LengthMismatch(MechestError):
    pass


class ZeroMeasurement(MechestError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"measurement {index} is zero or negative")


class ConfigMismatch(MechestError):
    pass


# --- workloads -------------------------------------------------------------

class FingerprintError(MechestError):
    pass
