"""Estimation-error metrics and FPU/no-FPU comparison reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .assembler import BinaryImage
from .calibration import MeasurementSample
from .costmodel import CostProfile, Estimate, estimate
from .errors import ConfigMismatch, FpuAbsent, LengthMismatch, ZeroMeasurement
from .simulator import HardwareConfig, run


@dataclass(frozen=True)
class ErrorReport:
    energy_errors: tuple[float, ...]  # signed relative errors per kernel
    time_errors: tuple[float, ...]
    labels: tuple[str, ...] = ()

    @property
    def M(self) -> int:
        return len(self.energy_errors)

    @property
    def energy_mean_abs(self) -> float:
        return sum(abs(e) for e in self.energy_errors) / self.M

    @property
    def energy_max_abs(self) -> float:
        return max(abs(e) for e in self.energy_errors)

    @property
    def time_mean_abs(self) -> float:
        return sum(abs(e) for e in self.time_errors) / self.M

    @property
    def time_max_abs(self) -> float:
        return max(abs(e) for e in self.time_errors)

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "energy": {"mean_abs": self.energy_mean_abs, "max_abs": self.energy_max_abs,
                       "per_kernel": list(self.energy_errors)},
            "time": {"mean_abs": self.time_mean_abs, "max_abs": self.time_max_abs,
                     "per_kernel": list(self.time_errors)},
            "labels": list(self.labels),
        }

    def table(self) -> str:
        rows = [
            ("", "Energy", "Time"),
            ("Mean absolute error", _pct(self.energy_mean_abs * 100), _pct(self.time_mean_abs * 100)),
            ("Maximum absolute error", _pct(self.energy_max_abs * 100), _pct(self.time_max_abs * 100)),
        ]
        return _render(rows) + f"\n(M = {self.M} kernels)"


def _pct(x: float, sign: bool = False) -> str:
    return f"{x:+.2f}%" if sign else f"{x:.2f}%"


def _render(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for k, r in enumerate(rows):
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        out.append(" | ".join(cells))
        if k == 0:
            out.append("-+-".join("-" * w for w in widths))
    return "\n".join(out)


def error_metrics(estimates: Sequence[Estimate], measurements: Sequence[MeasurementSample],
                  labels: Sequence[str] = ()) -> ErrorReport:
    """Relative estimation errors (estimate - measured) / measured per kernel."""
    if len(estimates) != len(measurements):
        raise LengthMismatch(f"{len(estimates)} estimates but {len(measurements)} measurements")
    if not estimates:
        raise LengthMismatch("at least one kernel is required")
    e_err, t_err = [], []
    for m, (est, meas) in enumerate(zip(estimates, measurements)):
        if meas.energy <= 0 or meas.time <= 0:
            raise ZeroMeasurement(m)
        e_err.append((est.energy - meas.energy) / meas.energy)
        t_err.append((est.time - meas.time) / meas.time)
    return ErrorReport(tuple(e_err), tuple(t_err), tuple(labels))


# ---------------------------------------------------------------------------
# hardware comparison
# ---------------------------------------------------------------------------

def _delta(new: float, base: float) -> float:
    return (new - base) / base * 100.0


@dataclass(frozen=True)
class ComparisonRow:
    workload: str
    with_fpu: Estimate
    without_fpu: Estimate

    @property
    def energy_delta(self) -> float:
        return _delta(self.with_fpu.energy, self.without_fpu.energy)

    @property
    def time_delta(self) -> float:
        return _delta(self.with_fpu.time, self.without_fpu.time)


@dataclass(frozen=True)
class ComparisonReport:
    """Percentage change when introducing an FPU, relative to the FPU-less baseline.

    Negative values mean the configuration with an FPU needs less.
    """
    config_fpu: HardwareConfig
    config_nofpu: HardwareConfig
    rows: tuple[ComparisonRow, ...] = field(default_factory=tuple)

    @property
    def logical_elements_delta(self) -> float:
        return _delta(self.config_fpu.logical_elements, self.config_nofpu.logical_elements)

    @property
    def mean_energy_delta(self) -> float:
        return sum(r.energy_delta for r in self.rows) / len(self.rows)

    @property
    def mean_time_delta(self) -> float:
        return sum(r.time_delta for r in self.rows) / len(self.rows)

    def to_json(self) -> dict:
        return {
            "baseline": self.config_nofpu.name,
            "with_fpu": self.config_fpu.name,
            "logical_elements_delta_pct": self.logical_elements_delta,
            "workloads": [
                {
                    "name": r.workload,
                    "energy_with_fpu_J": r.with_fpu.energy,
                    "energy_without_fpu_J": r.without_fpu.energy,
                    "time_with_fpu_s": r.with_fpu.time,
                    "time_without_fpu_s": r.without_fpu.time,
                    "energy_delta_pct": r.energy_delta,
                    "time_delta_pct": r.time_delta,
                }
                for r in self.rows
            ],
            "mean": {"energy_delta_pct": self.mean_energy_delta,
                     "time_delta_pct": self.mean_time_delta},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def table(self) -> str:
        le = _pct(self.logical_elements_delta, sign=True)
        header = ("", *(r.workload for r in self.rows), "Mean")
        rows = [
            header,
            ("Energy consumption", *(_pct(r.energy_delta, True) for r in self.rows),
             _pct(self.mean_energy_delta, True)),
            ("Processing time", *(_pct(r.time_delta, True) for r in self.rows),
             _pct(self.mean_time_delta, True)),
            ("# logical elements", *(le for _ in self.rows), le),
        ]
        return _render(rows)


def compare_configs(workloads: Sequence[tuple[BinaryImage, BinaryImage]],
                    cfg_fpu: HardwareConfig, cfg_nofpu: HardwareConfig,
                    profile_fpu: CostProfile, profile_nofpu: CostProfile,
                    names: Sequence[str] | None = None) -> ComparisonReport:
    """Estimate each (hard-float, soft-float) image pair on its configuration.

    The hard-float image runs on ``cfg_fpu`` and the soft-float image on
    ``cfg_nofpu``; deltas are relative to the FPU-less configuration.
    """
    if not cfg_fpu.fpu_present:
        raise ConfigMismatch(f"configuration {cfg_fpu.name!r} has no FPU")
    if cfg_nofpu.fpu_present:
        raise ConfigMismatch(f"baseline configuration {cfg_nofpu.name!r} has an FPU")
    if not workloads:
        raise ValueError("no workloads to compare")
    names = list(names) if names is not None else [f"workload{i}" for i in range(len(workloads))]
    rows = []
    for name, (hard, soft) in zip(names, workloads):
        try:
            soft_counts = run(soft, cfg_nofpu).counts
        except FpuAbsent as exc:
            raise ConfigMismatch(
                f"{name}: FP instruction at 0x{exc.pc:08x} on configuration without FPU") from None
        hard_counts = run(hard, cfg_fpu).counts
        rows.append(ComparisonRow(name, estimate(hard_counts, profile_fpu),
                                  estimate(soft_counts, profile_nofpu)))
    return ComparisonReport(cfg_fpu, cfg_nofpu, tuple(rows))
