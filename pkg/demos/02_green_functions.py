#!/usr/bin/env python3
"""Green's functions three ways: closed form, torus quadrature, power series.

g_lambda(x) = lambda (lambda - P)^(-1)(0, x) is the quantity everything
else consumes.  For the 1d lazy walk it is explicit; the torus integral
works in any dimension; and for |lambda| > 1 the resolvent power series
counts weighted return probabilities.  The three agree to 1e-8 and the
kernel decays geometrically in |x|.
"""

import math

import sparsewalk as sw

q = 0.25
kernel = sw.lazy1d(q)

print("== three evaluation routes, q = 0.25 ==")
print(f"{'lambda':>8} {'closed':>18} {'quadrature':>18} {'series':>18}")
for lam in (1.25, 2.0, -1.25, -2.0):
    closed = sw.g_lambda_closed_1d(q, lam).value
    quad = sw.g_lambda_quadrature(kernel, lam, 512).value
    series = sw.g_lambda_series(kernel, lam, tol=1e-12).value
    print(f"{lam:8.2f} {closed:18.12f} {quad:18.12f} {series:18.12f}")

print("\n== landmark values ==")
print(f"g at (2q-1)/(2q) = -1:  {sw.g_lambda_closed_1d(q, -1.0).value:.12f}  (exactly 1)")
expected = math.sqrt(1 - 2 * q) / (1 - q)
print(f"g at (2q-1)/q = -2:     {sw.g_lambda_closed_1d(q, -2.0).value:.12f}  "
      f"(= sqrt(1-2q)/(1-q) = {expected:.12f})")
print(f"g_0(0) at q = 1/2:      {sw.g_lambda_closed_1d(0.5, 0.0).value:.12f}  (left-edge limit)")

print("\n== geometric decay of the kernel ==")
simple = sw.simple1d()
vals = [(x, abs(sw.green_kernel(simple, 1.25, x, 512).value)) for x in range(1, 13)]
fit = sw.decay_rate_estimate(vals)
print(f"lambda = 1.25: fitted rate {fit.rate:.10f} vs ln 2 = {math.log(2):.10f}, "
      f"rms {fit.residual_rms:.2e}")

print("\n== level crossings g = 1 + 1/v ==")
crossings = sw.g_level_crossings(simple, 2.0)
lam_minus, lam_plus = sw.lambda_pm_1d(0.0, 1.0)
print(f"roots for v = 1: above {crossings.above:.12f} (exact {lam_plus:.12f}), "
      f"below {crossings.below[0]:.12f} (exact {lam_minus:.12f})")
