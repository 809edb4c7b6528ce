import json
import shutil
import subprocess

import pytest

from mechest.assembler import BinaryImage, assemble
from mechest.calibration import CsvImport, SyntheticPlatform
from mechest.cli import main
from mechest.costmodel import load_profile, save_profile
from mechest.isa import Category
from mechest.workloads import random_mixed_kernel

from conftest import program


@pytest.fixture
def src(tmp_path):
    p = tmp_path / "prog.s"
    p.write_text(program("LI r1, 10", "loop:", "ADDI r1, r1, -1", "BNE r1, r0, loop"))
    return p


def test_version(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert "mechest" in out and "ISA version" in out


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["bogus"]) == 1
    assert main(["run"]) == 1
    assert main(["calibrate"]) == 1


def test_asm_and_run(src, tmp_path, capsys):
    out = tmp_path / "prog.bin"
    assert main(["asm", str(src), "-o", str(out)]) == 0
    img = BinaryImage.load(out)
    assert img == assemble(src.read_text())
    counts_file = tmp_path / "c.json"
    assert main(["run", str(out), "--dump-counts", str(counts_file)]) == 0
    text = capsys.readouterr().out
    assert "IntegerArithmetic" in text and "total" in text
    obj = json.loads(counts_file.read_text())
    assert obj["kernel_hash"] == img.content_hash()
    assert obj["Jump"] == 10


def test_disassemble(src, tmp_path, capsys):
    out = tmp_path / "prog.bin"
    main(["asm", str(src), "-o", str(out)])
    capsys.readouterr()
    assert main(["asm", str(out), "--disassemble"]) == 0
    listing = capsys.readouterr().out
    assert "BNE" in listing and "HALT" in listing


def test_bad_source_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.s"
    bad.write_text("FROB r1\n")
    assert main(["asm", str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.bin")]) == 2


def test_fp_on_nofpu_is_runtime_error(tmp_path, capsys):
    from importlib import resources
    p = tmp_path / "fp.s"
    p.write_text(program("FADD.D f1, f2, f3"))
    cfg = resources.files("mechest.data").joinpath("leon3_nofpu.json")
    assert main(["run", str(p), "--config", str(cfg)]) == 3
    assert "FPU" in capsys.readouterr().err
    assert main(["run", str(p), "--config", str(cfg), "--soft-float"]) == 0


def test_budget_exhausted(tmp_path):
    p = tmp_path / "spin.s"
    p.write_text(program("loop:", "BEQ r0, r0, loop"))
    assert main(["run", str(p), "--budget", "1000"]) == 3


def test_estimate(tmp_path, capsys):
    counts = tmp_path / "c.json"
    full = {c.name: 0 for c in Category}
    full.update(IntegerArithmetic=1000, MemoryLoad=100, FpuDivide=10)
    counts.write_text(json.dumps(full))
    out = tmp_path / "e.json"
    assert main(["estimate", "--counts", str(counts), "--json", str(out)]) == 0
    assert "estimated energy" in capsys.readouterr().out
    est = json.loads(out.read_text())
    assert est["energy_J"] == pytest.approx(42_210e-9, rel=1e-12)
    assert est["time_s"] == pytest.approx(119_310e-9, rel=1e-12)


def test_estimate_bad_counts(tmp_path):
    counts = tmp_path / "c.json"
    full = {c.name: 0 for c in Category}
    counts.write_text(json.dumps(dict(full, IntegerArithmetic=-4)))
    assert main(["estimate", "--counts", str(counts)]) == 2
    counts.write_text(json.dumps({"IntegerArithmetic": 4}))
    assert main(["estimate", "--counts", str(counts)]) == 2
    counts.write_text(json.dumps({"Jmup": 4}))
    assert main(["estimate", "--counts", str(counts)]) == 2


def test_calibrate_synthetic_roundtrip(tmp_path, leon3, capsys):
    truth = tmp_path / "truth.json"
    save_profile(leon3, truth)
    out = tmp_path / "cal.json"
    rc = main(["calibrate", "--source", f"synthetic:{truth}:0:1", "-o", str(out),
               "--loop-count", "500", "--body-repeat", "10"])
    assert rc == 0
    prof = load_profile(out)
    for c in Category:
        assert prof.energy(c) == pytest.approx(leon3.energy(c), rel=1e-9)
        assert prof.time(c) == pytest.approx(leon3.time(c), rel=1e-9)


def test_calibrate_csv_via_emitted_kernels(tmp_path, leon3):
    kdir = tmp_path / "k"
    assert main(["calibrate", "--emit-kernels", str(kdir), "--loop-count", "200",
                 "--body-repeat", "5"]) == 0
    lines = (kdir / "kernels.csv").read_text().splitlines()[1:]
    assert len(lines) == 18
    plat = SyntheticPlatform(leon3)
    table = {}
    for line in lines:
        h, stem = line.split(",")
        img = BinaryImage.load(kdir / f"{stem}.bin")
        assert img.content_hash() == h
        table[h] = plat.measure(img)
    CsvImport(table).save(tmp_path / "m.csv")
    out = tmp_path / "cal.json"
    assert main(["calibrate", "--source", f"csv:{tmp_path / 'm.csv'}", "-o", str(out),
                 "--loop-count", "200", "--body-repeat", "5"]) == 0
    assert load_profile(out).energy(Category.Jump) == pytest.approx(leon3.energy(Category.Jump), rel=1e-9)


def test_calibrate_bad_source(tmp_path):
    assert main(["calibrate", "--source", "carrier-pigeon", "-o", str(tmp_path / "x.json")]) == 2


def test_evaluate_pipeline(tmp_path, leon3, capsys):
    plat = SyntheticPlatform(leon3, sigma=0.1, seed=2)
    meas, est_files = {}, []
    for seed in range(3):
        img = assemble(random_mixed_kernel(seed))
        path = tmp_path / f"k{seed}.bin"
        img.save(path)
        meas[img.content_hash()] = plat.measure(img)
        cfile, efile = tmp_path / f"c{seed}.json", tmp_path / f"e{seed}.json"
        assert main(["run", str(path), "--dump-counts", str(cfile)]) == 0
        assert main(["estimate", "--counts", str(cfile), "--json", str(efile)]) == 0
        est_files.append(str(efile))
    CsvImport(meas).save(tmp_path / "m.csv")
    capsys.readouterr()
    rep = tmp_path / "r.json"
    assert main(["evaluate", "--estimates", *est_files, "--measurements", str(tmp_path / "m.csv"),
                 "--json", str(rep)]) == 0
    assert "Mean absolute error" in capsys.readouterr().out
    doc = json.loads(rep.read_text())
    assert doc["M"] == 3 and doc["energy"]["max_abs"] < 0.1


def test_evaluate_no_match(tmp_path):
    e = tmp_path / "e.json"
    e.write_text(json.dumps({"kernel_hash": "abc", "energy_J": 1, "time_s": 1}))
    CsvImport({}).save(tmp_path / "m.csv")
    assert main(["evaluate", "--estimates", str(e), "--measurements", str(tmp_path / "m.csv")]) == 2


def test_compare_builtin(tmp_path, capsys):
    out = tmp_path / "cmp.json"
    assert main(["compare", "--json", str(out)]) == 0
    assert "logical elements" in capsys.readouterr().out
    doc = json.loads(out.read_text())
    rows = {w["name"]: w for w in doc["workloads"]}
    assert rows["fse_like"]["energy_delta_pct"] < 0
    assert rows["hevc_like"]["energy_delta_pct"] == pytest.approx(0.0, abs=1e-9)


def test_compare_list_file(tmp_path, capsys):
    (tmp_path / "a.s").write_text(program("LA r1, v", "FLD f1, 0(r1)", "FSQRT.D f2, f1",
                                          data=".align 8\nv: .double 9.0"))
    lst = tmp_path / "list.txt"
    lst.write_text("# one workload\na.s\n")
    assert main(["compare", "--workloads", str(lst)]) == 0
    assert "a" in capsys.readouterr().out.splitlines()[0]


def test_compare_swapped_configs(tmp_path):
    from importlib import resources
    data = resources.files("mechest.data")
    assert main(["compare", "--config-a", str(data / "leon3_nofpu.json"),
                 "--config-b", str(data / "leon3_fpu.json")]) == 3


def test_isa_doc(tmp_path):
    out = tmp_path / "isa.md"
    assert main(["isa-doc", "-o", str(out)]) == 0
    text = out.read_text()
    assert "FSQRT.D" in text and "FpuSqrt" in text


@pytest.mark.skipif(shutil.which("mechest") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["mechest", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "mechest" in r.stdout


def test_compare_manifest_file(tmp_path):
    from importlib import resources
    manifest = resources.files("mechest.workloads") / "manifest.json"
    out = tmp_path / "cmp.json"
    assert main(["compare", "--workloads", str(manifest), "--json", str(out)]) == 0
    builtin = tmp_path / "builtin.json"
    assert main(["compare", "--json", str(builtin)]) == 0
    assert out.read_text() == builtin.read_text()


def _pipeline(root, truth):
    root.mkdir()
    prof = root / "cal.json"
    assert main(["calibrate", "--source", f"synthetic:{truth}:0.1:4", "-o", str(prof),
                 "--loop-count", "300", "--body-repeat", "8", "--workers", "3"]) == 0
    plat = SyntheticPlatform(load_profile(truth), 0.1, 4)
    meas, ests = {}, []
    for seed in range(2):
        img = assemble(random_mixed_kernel(seed))
        (root / f"k{seed}.s").write_text(random_mixed_kernel(seed).render())
        assert main(["asm", str(root / f"k{seed}.s"), "-o", str(root / f"k{seed}.bin")]) == 0
        assert main(["run", str(root / f"k{seed}.bin"), "--dump-counts", str(root / f"c{seed}.json")]) == 0
        assert main(["estimate", "--counts", str(root / f"c{seed}.json"), "--profile", str(prof),
                     "--json", str(root / f"e{seed}.json")]) == 0
        meas[img.content_hash()] = plat.measure(img)
        ests.append(str(root / f"e{seed}.json"))
    CsvImport(meas).save(root / "m.csv")
    assert main(["evaluate", "--estimates", *ests, "--measurements", str(root / "m.csv"),
                 "--json", str(root / "r.json")]) == 0
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_pipeline_is_deterministic(tmp_path, leon3):
    truth = tmp_path / "truth.json"
    save_profile(leon3, truth)
    assert _pipeline(tmp_path / "a", truth) == _pipeline(tmp_path / "b", truth)
