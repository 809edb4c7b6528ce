"""``mechest`` command-line interface.

Exit codes: 0 success, 1 usage error, 2 input error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .assembler import IMAGE_MAGIC, BinaryImage, assemble, disassemble, read_source
from .calibration import (
    STANDARD_BODY_REPEAT,
    STANDARD_LOOP_COUNT,
    CsvImport,
    SyntheticPlatform,
    calibrate_all,
    gen_kernel_pair,
    parse_source,
    standard_specs,
)
from .costmodel import Estimate, default_profile, estimate, format_estimate, load_profile, save_profile
from .errors import (
    AsmError,
    BudgetExhausted,
    ConfigMismatch,
    ImageTooLarge,
    MachineFault,
    MechestError,
    NegativeDelta,
)
from .evaluation import compare_configs, error_metrics
from .isa import ISA_VERSION, isa_reference, load_category_overrides
from .simulator import CategoryCounts, HardwareConfig, run

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3

_RUNTIME_ERRORS = (MachineFault, BudgetExhausted, NegativeDelta, ConfigMismatch, ImageTooLarge)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _InputError(Exception):
    pass


def _data_file(name: str):
    from importlib import resources
    return resources.files("mechest.data").joinpath(name)


def _load_config(path: str | None, default: str) -> HardwareConfig:
    if path is None:
        return HardwareConfig.from_json(json.loads(_data_file(default).read_text()))
    try:
        return HardwareConfig.load(path)
    except (KeyError, TypeError, ValueError) as exc:
        raise _InputError(f"{path}: bad hardware config: {exc}") from None


def _load_profile(path: str | None):
    return default_profile() if path is None else load_profile(path)


def _load_program(path: str, soft_float: bool = False) -> BinaryImage:
    """Read a binary image, or assemble an assembly source file."""
    raw = Path(path).read_bytes()
    if raw[:4] == IMAGE_MAGIC:
        if soft_float:
            raise _InputError(f"{path}: --soft-float applies to assembly sources only")
        return BinaryImage.from_bytes(raw)
    try:
        return assemble(read_source(path), soft_float=soft_float)
    except AsmError as exc:
        raise _InputError(f"{path}: {exc}") from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_asm(args) -> int:
    if args.disassemble:
        img = BinaryImage.load(args.input)
        _write(disassemble(img).render(), args.output)
        return EXIT_OK
    img = _load_program(args.input, args.soft_float)
    out = args.output or str(Path(args.input).with_suffix(".bin"))
    img.save(out)
    print(f"{out}: {len(img.text)} instructions, {len(img.data)} data bytes, "
          f"entry 0x{img.entry_point:08x}, sha256 {img.content_hash()}")
    return EXIT_OK


def cmd_run(args) -> int:
    img = _load_program(args.program, args.soft_float)
    cfg = _load_config(args.config, "leon3_fpu.json")
    overrides = load_category_overrides(args.categories) if args.categories else None
    result = run(img, cfg, budget=args.budget, category_overrides=overrides)
    counts = result.counts
    width = max(len(c.name) for c, _ in counts.items())
    for cat, n in counts.items():
        print(f"{cat.name:<{width}} {n:>14}")
    print(f"{'total':<{width}} {counts.total():>14}")
    if args.dump_counts:
        obj = counts.to_json()
        obj["kernel_hash"] = img.content_hash()
        Path(args.dump_counts).write_text(json.dumps(obj, indent=2) + "\n")
    return EXIT_OK


def cmd_estimate(args) -> int:
    raw = json.loads(Path(args.counts).read_text())
    try:
        counts = CategoryCounts.from_json(raw)
    except (TypeError, ValueError) as exc:
        raise _InputError(f"{args.counts}: {exc}") from None
    profile = _load_profile(args.profile)
    est = estimate(counts, profile)
    print(format_estimate(est, counts))
    if args.json:
        obj = est.to_json()
        if "kernel_hash" in raw:
            obj["kernel_hash"] = raw["kernel_hash"]
        Path(args.json).write_text(json.dumps(obj, indent=2) + "\n")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    specs = standard_specs(body_repeat=args.body_repeat, loop_count=args.loop_count)
    if args.emit_kernels:
        out = Path(args.emit_kernels)
        out.mkdir(parents=True, exist_ok=True)
        rows = []
        for cat, spec in specs.items():
            pair = gen_kernel_pair(spec)
            for kind, src in (("ref", pair.reference), ("test", pair.test)):
                stem = f"{cat.name}_{kind}"
                (out / f"{stem}.s").write_text(src.render())
                img = assemble(src)
                img.save(out / f"{stem}.bin")
                rows.append(f"{img.content_hash()},{stem}")
        (out / "kernels.csv").write_text("kernel_hash,kernel\n" + "\n".join(rows) + "\n")
        print(f"wrote {len(rows)} kernels to {out}")
        if not args.source:
            return EXIT_OK
    if not args.source or not args.output:
        raise _UsageError("calibrate needs --source and -o (or only --emit-kernels)")
    cfg = _load_config(args.config, "leon3_fpu.json")
    try:
        source = parse_source(args.source, cfg)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    platform = (source.ground_truth.platform if isinstance(source, SyntheticPlatform)
                else Path(args.source[4:]).stem)
    profile = calibrate_all(specs, source, workers=args.workers,
                            platform=platform, hardware_config=cfg.name)
    save_profile(profile, args.output)
    for cat in profile.pending:
        print(f"warning: {cat.name} flagged pending (see provenance)", file=sys.stderr)
    print(f"wrote {args.output}")
    return EXIT_OK


def _read_estimates(paths: list[str]) -> dict[str, Estimate]:
    out = {}
    for p in paths:
        obj = json.loads(Path(p).read_text())
        for item in obj if isinstance(obj, list) else [obj]:
            if "kernel_hash" not in item:
                raise _InputError(f"{p}: estimate without kernel_hash")
            out[item["kernel_hash"]] = Estimate(float(item["energy_J"]), float(item["time_s"]))
    return out


def cmd_evaluate(args) -> int:
    ests = _read_estimates(args.estimates)
    try:
        meas = CsvImport.load(args.measurements).table
    except (KeyError, ValueError) as exc:
        raise _InputError(f"{args.measurements}: {exc}") from None
    keys = [k for k in ests if k in meas]
    unmatched = [k for k in ests if k not in meas]
    for k in unmatched:
        print(f"warning: no measurement for kernel {k}", file=sys.stderr)
    if not keys:
        raise _InputError("no estimate matches a measured kernel hash")
    report = error_metrics([ests[k] for k in keys], [meas[k] for k in keys], labels=keys)
    print(report.table())
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), indent=2) + "\n")
    return EXIT_OK


def _read_workload_list(path: str) -> list[tuple[str, Path | None]]:
    """Entries of a manifest (.json) or a plain list of source paths."""
    from .workloads import WORKLOAD_NAMES, load_manifest

    if path == "builtin":
        return [(name, None) for name in WORKLOAD_NAMES]
    p = Path(path)
    if p.suffix == ".json":
        return [(w.name, p.parent / w.source) for w in load_manifest(p)]
    entries = []
    for line in p.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            src = Path(line) if Path(line).is_absolute() else p.parent / line
            entries.append((src.stem, src))
    return entries


def cmd_compare(args) -> int:
    from .workloads import workload_images

    cfg_a = _load_config(args.config_a, "leon3_fpu.json")
    cfg_b = _load_config(args.config_b, "leon3_nofpu.json")
    prof_a = _load_profile(args.profile_a)
    prof_b = _load_profile(args.profile_b)
    names, pairs = [], []
    for name, src in _read_workload_list(args.workloads):
        if src is None:
            pairs.append(workload_images(name))
        else:
            pairs.append((_load_program(str(src)), _load_program(str(src), soft_float=True)))
        names.append(name)
    report = compare_configs(pairs, cfg_a, cfg_b, prof_a, prof_b, names=names)
    print(report.table())
    if args.json:
        Path(args.json).write_text(report.dumps())
    return EXIT_OK


def cmd_isa_doc(args) -> int:
    _write(isa_reference(), args.output)
    return EXIT_OK


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mechest", description="Instruction-category energy and time estimation.")
    p.add_argument("--version", action="version",
                   version=f"mechest {__version__} (SV8-mini ISA version {ISA_VERSION})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("asm", help="assemble a source file (or disassemble an image)")
    a.add_argument("input")
    a.add_argument("-o", "--output")
    a.add_argument("--soft-float", action="store_true", help="lower FP instructions to library calls")
    a.add_argument("--disassemble", action="store_true", help="treat input as an image and print source")
    a.set_defaults(func=cmd_asm)

    r = sub.add_parser("run", help="simulate a program and print category counts")
    r.add_argument("program", help="binary image or assembly source")
    r.add_argument("--config", help="hardware config JSON (default: shipped FPU config)")
    r.add_argument("--budget", type=int, default=2**32, help="instruction budget")
    r.add_argument("--dump-counts", metavar="FILE", help="write counts JSON")
    r.add_argument("--categories", metavar="FILE", help="JSON mnemonic -> category overrides")
    r.add_argument("--soft-float", action="store_true", help="assemble sources with FP lowering")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("estimate", help="price category counts with a cost profile")
    e.add_argument("--counts", required=True)
    e.add_argument("--profile", help="profile JSON (default: shipped LEON3 profile)")
    e.add_argument("--json", metavar="FILE", help="also write the estimate as JSON")
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("calibrate", help="derive a profile by reference/test kernel differencing")
    c.add_argument("--source", help="synthetic:<truth.json>:<sigma>:<seed> or csv:<file>")
    c.add_argument("-o", "--output")
    c.add_argument("--config", help="hardware config used by synthetic sources")
    c.add_argument("--loop-count", type=int, default=STANDARD_LOOP_COUNT)
    c.add_argument("--body-repeat", type=int, default=STANDARD_BODY_REPEAT)
    c.add_argument("--workers", type=int, default=None)
    c.add_argument("--emit-kernels", metavar="DIR", help="write kernel sources, images and hashes")
    c.set_defaults(func=cmd_calibrate)

    v = sub.add_parser("evaluate", help="estimation error against measurements")
    v.add_argument("--estimates", required=True, nargs="+")
    v.add_argument("--measurements", required=True, help="CSV: kernel_hash, energy_J, time_s")
    v.add_argument("--json", metavar="FILE")
    v.set_defaults(func=cmd_evaluate)

    m = sub.add_parser("compare", help="FPU vs no-FPU comparison over workloads")
    m.add_argument("--workloads", default="builtin",
                   help="manifest JSON, text list of sources, or 'builtin'")
    m.add_argument("--config-a", help="configuration with FPU")
    m.add_argument("--config-b", help="baseline configuration without FPU")
    m.add_argument("--profile-a")
    m.add_argument("--profile-b")
    m.add_argument("--json", metavar="FILE")
    m.set_defaults(func=cmd_compare)

    d = sub.add_parser("isa-doc", help="print the instruction encoding reference")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_isa_doc)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mechest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExhausted as exc:
        print(f"mechest: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except _RUNTIME_ERRORS as exc:
        print(f"mechest: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (_InputError, MechestError, OSError, ValueError, KeyError) as exc:
        print(f"mechest: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
