"""
Should the core get an FPU?
===========================

Both bundled workloads are assembled twice: with hardware floating point, and
with FP instructions lowered to integer library calls.  Each variant is priced
on its configuration and the change relative to the FPU-less core is reported.
"""

from importlib import resources

from mechest import default_profile
from mechest.evaluation import compare_configs
from mechest.simulator import HardwareConfig
from mechest.workloads import WORKLOAD_NAMES, workload_images

data = resources.files("mechest.data")
with_fpu = HardwareConfig.load(str(data / "leon3_fpu.json"))
without_fpu = HardwareConfig.load(str(data / "leon3_nofpu.json"))
profile = default_profile()

pairs = [workload_images(name) for name in WORKLOAD_NAMES]
report = compare_configs(pairs, with_fpu, without_fpu, profile, profile, names=WORKLOAD_NAMES)
print(report.table())

# the integer workload never touches the FPU, so only the area grows
for row in report.rows:
    print(row.workload, f"{row.without_fpu.energy * 1e6:.1f} uJ -> {row.with_fpu.energy * 1e6:.1f} uJ")
