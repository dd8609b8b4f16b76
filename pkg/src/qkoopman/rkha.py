"""Subconvolutive weights, truncated kernels, and the smoothing semigroup.

A weight lambda_tau(j) = prod_i exp(-tau |j_i|^p), 0 < p < 1, on the integer
lattice induces a translation-invariant reproducing kernel on the d-torus via
the truncated Mercer sum k(x, y) = sum_j lambda(j) exp(i j.(y-x)).  The scaled
characters psi_j = sqrt(lambda(j)) gamma_j form an orthonormal basis of the
induced space, which is simultaneously a Banach algebra under pointwise
multiplication; the comultiplication coefficients and the subconvolutivity,
GRS and Beurling-Domar diagnostics below quantify that structure at finite
truncation.

All operators are realized on coefficient vectors.  The kernel integral
operator K multiplies L2 Fourier coefficients by sqrt(lambda(j)) (mapping
the L2 basis vector to the unit basis vector psi_j), its adjoint K* does the
same in the opposite direction, and G = K*K multiplies by lambda(j).  The
family {G_tau} is a semigroup: composing smoothers adds their tau parameters
exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve

from .dynamics import FourierObservable
from .errors import ValidationError


@dataclass(frozen=True)
class SubexpWeight:
    """Subexponential lattice weight lambda(j) = prod_i exp(-tau |j_i|^p)."""

    tau: float
    p: float
    d: int = 1

    def __post_init__(self):
        if self.tau <= 0:
            raise ValidationError("tau must be positive")
        if not (0.0 < self.p < 1.0):
            raise ValidationError("p must lie in (0, 1)")
        if self.d < 1:
            raise ValidationError("dimension must be >= 1")

    def log_value(self, j) -> float:
        j = np.atleast_1d(np.asarray(j, dtype=float))
        return -self.tau * float(np.sum(np.abs(j) ** self.p))

    def value(self, j) -> float:
        return math.exp(self.log_value(j))

    def lattice_values(self, lat: "TruncatedLattice") -> np.ndarray:
        return np.exp(-self.tau * np.sum(np.abs(lat.indices) ** self.p, axis=1))

    def half(self) -> "SubexpWeight":
        return SubexpWeight(self.tau / 2.0, self.p, self.d)

    def combined(self, other: "SubexpWeight") -> "SubexpWeight":
        if other.p != self.p or other.d != self.d:
            raise ValidationError("weights combine only within one (p, d) family")
        return SubexpWeight(self.tau + other.tau, self.p, self.d)


class TruncatedLattice:
    """All multi-indices j in Z^d with |j_i| <= J, in lexicographic order."""

    __slots__ = ("d", "J", "indices", "_position")

    def __init__(self, d: int, J: int):
        if d < 1 or J < 0:
            raise ValidationError("lattice needs d >= 1 and J >= 0")
        self.d = d
        self.J = J
        self.indices = np.array(
            list(itertools.product(range(-J, J + 1), repeat=d)), dtype=int
        )
        self._position = {tuple(row): k for k, row in enumerate(self.indices)}

    @property
    def size(self) -> int:
        return (2 * self.J + 1) ** self.d

    def position(self, j) -> int:
        key = (int(j),) if np.isscalar(j) else tuple(int(v) for v in j)
        try:
            return self._position[key]
        except KeyError:
            raise ValidationError(f"index {key} outside lattice J={self.J}") from None

    def __contains__(self, j) -> bool:
        key = (int(j),) if np.isscalar(j) else tuple(int(v) for v in j)
        return key in self._position

    def observable_vector(self, f: FourierObservable) -> np.ndarray:
        """Dense coefficient vector of f over this lattice (error if outside)."""
        from .errors import OutOfLatticeError

        if f.d != self.d:
            raise ValidationError("observable and lattice dimensions differ")
        out = np.zeros(self.size, dtype=complex)
        for j, c in f.coeffs.items():
            if j not in self:
                raise OutOfLatticeError(f"coefficient at {j} outside lattice J={self.J}")
            out[self.position(j)] = c
        return out

    def vector_observable(self, vec: np.ndarray) -> FourierObservable:
        return FourierObservable(
            {tuple(self.indices[k]): vec[k] for k in range(self.size) if vec[k] != 0},
            d=self.d,
        )


def kernel_value(w: SubexpWeight, lat: TruncatedLattice, x, y) -> complex:
    """Truncated Mercer sum k(x, y) = sum_{j in lat} lambda(j) exp(i j.(y-x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lam = w.lattice_values(lat)
    phases = lat.indices @ (y - x)
    return complex(np.sum(lam * np.exp(1j * phases)))


def kernel_row(w: SubexpWeight, lat: TruncatedLattice, x, grid: np.ndarray) -> np.ndarray:
    """Kernel section k(x, .) evaluated on a set of 1-d grid points (d=1 only)."""
    if lat.d != 1:
        raise ValidationError("kernel_row is a d=1 convenience")
    lam = w.lattice_values(lat)
    j = lat.indices[:, 0].astype(float)
    x0 = float(np.atleast_1d(x)[0])
    out = np.empty(grid.size)
    for chunk in range(0, grid.size, 64):
        u = grid[chunk : chunk + 64] - x0
        out[chunk : chunk + 64] = (lam[None, :] * np.cos(np.outer(u, j))).sum(axis=1)
    return out


def kernel_gram(w: SubexpWeight, lat: TruncatedLattice, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(points)
    n = pts.shape[0]
    gram = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            gram[a, b] = kernel_value(w, lat, pts[a], pts[b])
    return gram


def _dense_weight_array(w, lat: TruncatedLattice) -> np.ndarray:
    """Weight values reshaped to the (2J+1,)^d cube (axis order = index order)."""
    if isinstance(w, np.ndarray):
        flat = np.asarray(w, dtype=float)
        if flat.size != lat.size:
            raise ValidationError("weight array does not match lattice size")
    else:
        flat = w.lattice_values(lat)
    return flat.reshape((2 * lat.J + 1,) * lat.d)


def truncated_autoconvolution(w, lat: TruncatedLattice) -> np.ndarray:
    """(lambda * lambda)(j) = sum_{k, j-k in lat} lambda(k) lambda(j-k), on lat.

    Accepts a SubexpWeight or a raw weight array over the lattice (useful for
    injecting test weights such as the indicator of {0}).
    """
    cube = _dense_weight_array(w, lat)
    full = convolve(cube, cube, mode="full", method="direct")
    J = lat.J
    center = tuple(slice(J, 3 * J + 1) for _ in range(lat.d))
    return full[center].reshape(lat.size)


def subconvolutivity_constant(w, lat: TruncatedLattice) -> float:
    """max_j (lambda*lambda)(j) / lambda(j) over the truncated lattice."""
    conv = truncated_autoconvolution(w, lat)
    lam = _dense_weight_array(w, lat).reshape(lat.size)
    mask = lam > 0
    return float(np.max(conv[mask] / lam[mask]))


def grs_sequence(w: SubexpWeight, gamma, nmax: int) -> np.ndarray:
    """lambda(n*gamma)^(1/n) for n = 1..nmax; tends to 1 for these weights."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.all(gamma == 0):
        raise ValidationError("gamma must be nonzero")
    s = float(np.sum(np.abs(gamma) ** w.p))
    n = np.arange(1, nmax + 1, dtype=float)
    return np.exp(-w.tau * n ** (w.p - 1.0) * s)


def beurling_domar_sum(w: SubexpWeight, gamma, nmax: int = 100_000):
    """Partial sum of sum_n ln(1/lambda(n*gamma))/n^2 plus a closed-form tail bound.

    The summand is tau * n^(p-2) * sum_i |gamma_i|^p, so the tail beyond nmax
    is below tau * s * nmax^(p-1) / (1-p) by integral comparison.
    """
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.all(gamma == 0):
        raise ValidationError("gamma must be nonzero")
    s = float(np.sum(np.abs(gamma) ** w.p))
    n = np.arange(1, nmax + 1, dtype=float)
    partial = w.tau * s * float(np.sum(n ** (w.p - 2.0)))
    tail = w.tau * s * nmax ** (w.p - 1.0) / (1.0 - w.p)
    return partial, tail


def comultiplication_pairs(w: SubexpWeight, gamma, lat: TruncatedLattice):
    """All (alpha, beta, coeff) with alpha + beta = gamma inside the lattice.

    The basis vector at gamma splits as sum over such pairs with coefficient
    sqrt(lambda(alpha) lambda(beta) / lambda(gamma)).
    """
    gamma_t = (int(gamma),) if np.isscalar(gamma) else tuple(int(v) for v in gamma)
    if gamma_t not in lat:
        raise ValidationError(f"gamma {gamma_t} outside lattice")
    log_g = w.log_value(gamma_t)
    pairs = []
    for alpha in lat.indices:
        beta = tuple(int(g - a) for g, a in zip(gamma_t, alpha))
        if beta in lat:
            alpha_t = tuple(int(v) for v in alpha)
            coeff = math.exp(0.5 * (w.log_value(alpha_t) + w.log_value(beta) - log_g))
            pairs.append((alpha_t, beta, coeff))
    return pairs


def feature_coefficients(w: SubexpWeight, lat: TruncatedLattice, x) -> np.ndarray:
    """Coefficients of the kernel section at x in the orthonormal basis.

    Entry at j is sqrt(lambda(j)) exp(-i j.x); the squared norm reproduces
    kernel_value(x, x).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lam = w.lattice_values(lat)
    return np.sqrt(lam) * np.exp(-1j * (lat.indices @ x))


K_TAU = "K_tau"
K_STAR = "K_star"
G_TAU = "G_tau"


@dataclass(frozen=True)
class DiagonalSmoother:
    """Coefficient-diagonal realization of the kernel smoothing operators.

    role K_tau:  L2 coefficients -> basis coefficients, multiplier sqrt(lambda)
    role K_star: basis coefficients -> L2 coefficients, multiplier sqrt(lambda)
    role G_tau:  L2 -> L2, multiplier lambda (= K_star after K_tau)
    """

    weight: SubexpWeight
    role: str = G_TAU

    def __post_init__(self):
        if self.role not in (K_TAU, K_STAR, G_TAU):
            raise ValidationError(f"unknown smoother role {self.role!r}")

    def multiplier(self, j) -> float:
        log = self.weight.log_value(j)
        return math.exp(log if self.role == G_TAU else 0.5 * log)


def apply_smoother(op: DiagonalSmoother, f: FourierObservable) -> FourierObservable:
    return FourierObservable(
        {j: op.multiplier(j) * c for j, c in f.coeffs.items()}, d=f.d
    )


def compose_smoothers(a: DiagonalSmoother, b: DiagonalSmoother) -> DiagonalSmoother:
    """Exact semigroup composition: G_tau after G_sigma is G_{tau+sigma}."""
    if a.role != G_TAU or b.role != G_TAU:
        raise ValidationError("only G-type smoothers compose within the semigroup")
    return DiagonalSmoother(a.weight.combined(b.weight), G_TAU)
