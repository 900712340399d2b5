"""Distances between output laws, and why square-root intensities matter.

Total variation between two Poisson laws is sandwiched by their overlap
coefficient, and the overlap has a closed form in the square-root means:
F^2 = exp(-(sqrt(mu1) - sqrt(mu2))^2).  Requiring decoders with Type I and
Type II budgets therefore forces the square-root intensities of distinct
codewords apart by a computable radius; that single number drives the whole
packing story.
"""

import math

import numpy as np

from dipc import (
    bhattacharyya,
    min_distance_radius,
    poisson_bhattacharyya_sq,
    poisson_pmf_truncated,
    tv_distance,
)

print("sandwich 1-F <= TV <= sqrt(1-F^2) and closed-form overlap:")
print(f"{'mu1':>6} {'mu2':>6} {'1-F':>8} {'TV':>8} {'sqrt(1-F^2)':>12} {'F^2 closed':>11} {'F^2 sum':>9}")
rng = np.random.default_rng(2)
for _ in range(8):
    mu1, mu2 = sorted(rng.uniform(0, 20, size=2))
    q1, q2 = poisson_pmf_truncated(mu1), poisson_pmf_truncated(mu2)
    overlap = bhattacharyya(q1, q2)
    tv = tv_distance(q1, q2)
    print(f"{mu1:6.2f} {mu2:6.2f} {1-overlap:8.4f} {tv:8.4f} "
          f"{math.sqrt(1-overlap**2):12.4f} "
          f"{poisson_bhattacharyya_sq(mu1, mu2):11.4f} {overlap**2:9.4f}")

print("\npacking radius from the error budget, r = sqrt(-ln(1-delta^2))/2:")
for budget1, budget2 in [(0.1, 0.1), (0.05, 0.05), (0.01, 0.01), (0.25, 0.25)]:
    r = min_distance_radius(budget1, budget2)
    delta = 1 - budget1 - budget2
    print(f"  budgets ({budget1}, {budget2}): delta={delta:.2f}  r={r:.4f}"
          f"  (overlap at distance 2r: {math.exp(-(2*r)**2):.4f} = 1-delta^2)")
