import pytest

from mechest.assembler import assemble
from mechest.costmodel import default_profile
from mechest.simulator import HardwareConfig, run


@pytest.fixture(scope="session")
def fpu():
    return HardwareConfig("fpu", fpu_present=True, logical_elements=20900)


@pytest.fixture(scope="session")
def nofpu():
    return HardwareConfig("nofpu", fpu_present=False, logical_elements=10000)


@pytest.fixture(scope="session")
def leon3():
    return default_profile()


def run_text(text, cfg=None, soft_float=False, **kw):
    cfg = cfg or HardwareConfig("fpu")
    return run(assemble(text, soft_float=soft_float), cfg, **kw)


def program(*body, data=""):
    """Wrap instruction lines into a runnable unit ending in HALT."""
    lines = [".text", ".entry main", "main:"] + [f"    {b}" for b in body] + ["    HALT"]
    if data:
        lines += [".data", data]
    return "\n".join(lines) + "\n"


# acceptance criteria report: test_acceptance records (id, title, passed, detail)
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k}. {title}: {detail}")
