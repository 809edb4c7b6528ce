"""
How far off are the estimates?
==============================

Calibrate on a noisy synthetic platform, then compare estimates against
fresh noisy measurements of random instruction mixes and the bundled
workloads.
"""

from mechest.calibration import SyntheticPlatform, calibrate_all, standard_specs
from mechest.costmodel import default_profile, estimate
from mechest.evaluation import error_metrics
from mechest.workloads import evaluation_suite

platform = SyntheticPlatform(default_profile(), sigma=0.1, seed=3)
profile = calibrate_all(standard_specs(loop_count=100_000), platform)

suite = evaluation_suite(n_mixed=20)
estimates, measurements = [], []
for name, image in suite:
    counts = platform.counts(image)
    estimates.append(estimate(counts, profile))
    measurements.append(platform.measure_counts(counts, image.content_hash()))

report = error_metrics(estimates, measurements, [name for name, _ in suite])
print(report.table())

# the largest single miss
worst = max(range(report.M), key=lambda m: abs(report.energy_errors[m]))
print(f"worst energy estimate: {report.labels[worst]} ({report.energy_errors[worst]:+.3%})")
