"""Subexponential kernels on the circle and their algebra structure.

A weight exp(-tau |j|^p) with 0 < p < 1 induces a smoothing kernel that is
nonnegative with unit mass (a Markov kernel), decays subexponentially, and
makes the induced function space an algebra under pointwise multiplication.
The script surveys the numeric fingerprints of that structure: the Mercer
diagonal, the Markov checks, the subconvolutivity constant, the growth
conditions, and the splitting coefficients of the basis vectors.
"""

import numpy as np

from qkoopman.dynamics import TWO_PI, FourierObservable
from qkoopman.rkha import (
    DiagonalSmoother,
    SubexpWeight,
    TruncatedLattice,
    apply_smoother,
    beurling_domar_sum,
    compose_smoothers,
    comultiplication_pairs,
    feature_coefficients,
    grs_sequence,
    kernel_row,
    kernel_value,
    subconvolutivity_constant,
)

w = SubexpWeight(tau=1.0, p=0.5)
lat = TruncatedLattice(d=1, J=64)

print("kernel diagonal k(x,x):", kernel_value(w, lat, [0.0], [0.0]).real)

grid = np.arange(512) * TWO_PI / 512
row = kernel_row(w, lat, [0.0], grid)
print(f"Markov checks: min over grid = {row.min():.6f}, mean = {np.mean(row):.12f}")

print("\nsubconvolutivity constant under bandwidth doubling:")
for J in (16, 32, 64):
    print(f"  J={J:>3}: C = {subconvolutivity_constant(w, TruncatedLattice(1, J)):.6f}")

seq = grs_sequence(w, (1,), 10_000)
print(f"\ngrowth condition: lambda(n)^(1/n) climbs to {seq[-1]:.6f} at n = 10^4")
partial, tail = beurling_domar_sum(w, (1,))
print(f"log-weight series: partial sum {partial:.6f}, tail bound {tail:.2e}")

print("\nsplitting of the basis vector at j = 2 (nonzero pairs):")
for alpha, beta, coeff in comultiplication_pairs(w, (2,), TruncatedLattice(1, 3)):
    print(f"  ({alpha[0]:+d}) + ({beta[0]:+d}) -> {coeff:.6f}")

# the feature map reproduces the kernel through plain coefficient inner products
x, y = 1.2, 2.9
fx = feature_coefficients(w, lat, [x])
fy = feature_coefficients(w, lat, [y])
print("\nreproducing identity:")
print(f"  <phi(x), phi(y)> = {np.vdot(fx, fy).real:.12f}")
print(f"  k(x, y)          = {kernel_value(w, lat, [x], [y]).real:.12f}")

# smoothers form a semigroup: parameters add under composition
g_a = DiagonalSmoother(SubexpWeight(0.4, 0.5), "G_tau")
g_b = DiagonalSmoother(SubexpWeight(1.1, 0.5), "G_tau")
combined = compose_smoothers(g_a, g_b)
print("\nsmoothing semigroup:", g_a.weight.tau, "+", g_b.weight.tau, "->", combined.weight.tau)
f = FourierObservable({(j,): 1.0 for j in range(-5, 6)}, d=1)
chained = apply_smoother(g_a, apply_smoother(g_b, f))
direct = apply_smoother(combined, f)
gap = max(abs(chained.coeffs[j] - direct.coeffs[j]) for j in f.coeffs)
print(f"entrywise agreement of the two application orders: {gap:.1e}")
