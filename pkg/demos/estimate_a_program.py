"""
Estimating energy and time of a small program
=============================================

Assemble a loop, count executed instructions per category, and price the
counts with the shipped LEON3 profile.
"""

from mechest import assemble, default_profile, estimate, run
from mechest.costmodel import format_estimate
from mechest.simulator import HardwareConfig

# a sum over 100 words: loads, adds and a loop branch
source = """
.text
.entry main
main:
    LA r1, values
    ADDI r2, r0, 100
    ADDI r3, r0, 0
loop:
    LD r4, 0(r1)
    ADD r3, r3, r4
    ADDI r1, r1, 4
    ADDI r2, r2, -1
    BNE r2, r0, loop
    HALT
.data
values:
    .space 400
"""

image = assemble(source)
result = run(image, HardwareConfig("leon3", fpu_present=True))

# every executed instruction lands in exactly one category
print(result.counts.to_json())
assert result.counts.total() == result.executed

profile = default_profile()
est = estimate(result.counts, profile)
print(format_estimate(est, result.counts))
