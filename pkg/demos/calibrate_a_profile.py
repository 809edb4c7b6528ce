"""
Calibrating a cost profile from kernel pairs
============================================

Each category is priced by measuring a reference loop and a test loop that
repeats one instruction, then dividing the difference by the number of extra
instructions.  A synthetic platform with known costs stands in for the
hardware, so the recovered profile can be checked against the truth.
"""

from mechest.calibration import SyntheticPlatform, calibrate_all, gen_kernel_pair, standard_specs
from mechest.costmodel import default_profile
from mechest.isa import Category

truth = default_profile()

# one kernel pair, as generated for the FpuDivide category
specs = standard_specs(body_repeat=20, loop_count=20_000)
pair = gen_kernel_pair(specs[Category.FpuDivide])
print(pair.test.render())

# noise-free: the differences recover the truth exactly
exact = calibrate_all(specs, SyntheticPlatform(truth))

# 10% per-instruction jitter averages out over many loop iterations
noisy = calibrate_all(specs, SyntheticPlatform(truth, sigma=0.1, seed=1))

print(f"{'category':<18} {'true e [nJ]':>12} {'exact':>12} {'noisy':>12}")
for cat in Category:
    print(f"{cat.name:<18} {truth.energy(cat) * 1e9:12.3f} "
          f"{exact.energy(cat) * 1e9:12.3f} {noisy.energy(cat) * 1e9:12.3f}")

# anything implausible would be flagged for manual review
print("pending:", noisy.pending)
