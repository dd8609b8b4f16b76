"""Measure-preserving model systems and band-limited observables.

Two exactly tractable system families are provided: ergodic rotations on the
d-torus (continuous time, pure point spectrum) and cyclic shifts on a finite
periodic orbit (discrete time, exact finite-dimensional Koopman matrix).
Observables on the torus are finite Fourier sums; their exact Koopman
evolution multiplies each coefficient by a phase and serves as the oracle
against which every approximation in the package is checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * math.pi


def wrap_angles(theta) -> np.ndarray:
    """Canonical torus representative with every angle in [0, 2*pi)."""
    out = np.atleast_1d(np.asarray(theta, dtype=float)) % TWO_PI
    # x % TWO_PI can round up to TWO_PI for tiny negative x; fold it back.
    out[out >= TWO_PI] = 0.0
    return out


@dataclass(frozen=True)
class RotationSystem:
    """Rotation flow theta -> theta + t*alpha (mod 2*pi) on the d-torus."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if alpha.ndim != 1 or alpha.size < 1:
            raise ValidationError("alpha must be a nonempty vector of frequencies")
        if not np.all(np.isfinite(alpha)) or np.any(alpha == 0.0):
            raise ValidationError("all frequencies must be finite and nonzero")
        object.__setattr__(self, "alpha", alpha)

    @property
    def d(self) -> int:
        return self.alpha.size


def flow(sys: RotationSystem, theta, t: float) -> np.ndarray:
    """Advance a torus point by time t: (theta + t*alpha) mod 2*pi.

    A single fused mod is applied after the arithmetic so repeated calls
    are bitwise reproducible.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != sys.alpha.shape:
        raise ValidationError(
            f"point has dimension {theta.size}, system has dimension {sys.d}"
        )
    return wrap_angles(theta + t * sys.alpha)


def sample_trajectory(sys: RotationSystem, x0, dt: float, n: int) -> np.ndarray:
    """Return the n points x0, Phi^dt(x0), ..., Phi^((n-1)dt)(x0).

    Points are generated iteratively so consecutive rows satisfy the flow
    step exactly.
    """
    if n < 1:
        raise ValidationError("trajectory length must be >= 1")
    if dt <= 0:
        raise ValidationError("dt must be positive")
    out = np.empty((n, sys.d))
    out[0] = wrap_angles(x0)
    for k in range(1, n):
        out[k] = flow(sys, out[k - 1], dt)
    return out


def rational_dependence_warnings(alpha, tol: float = 1e-9, max_denominator: int = 100):
    """Frequency-ratio pairs suspiciously close to a small rational.

    Rational independence cannot be certified in floating point; this scan
    flags every pair (i, k) whose ratio alpha_i/alpha_k lies within ``tol``
    of a rational with denominator <= ``max_denominator``.  Returns a list
    of (i, k, Fraction) triples; an empty list means nothing was flagged.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    flagged = []
    for i in range(alpha.size):
        for k in range(i + 1, alpha.size):
            ratio = alpha[i] / alpha[k]
            best = Fraction(ratio).limit_denominator(max_denominator)
            if abs(ratio - float(best)) <= tol:
                flagged.append((i, k, best))
    return flagged


@dataclass(frozen=True)
class PeriodicOrbitSystem:
    """Cyclic shift i -> i+1 (mod M) on M states with uniform measure."""

    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValidationError("orbit length must be >= 1")

    @property
    def mu(self) -> np.ndarray:
        return np.full(self.M, 1.0 / self.M)

    def step(self, i: int) -> int:
        return (i + 1) % self.M

    def koopman_matrix(self) -> np.ndarray:
        """Permutation matrix of f -> f o Phi in the orthonormal point basis."""
        u = np.zeros((self.M, self.M))
        u[np.arange(self.M), (np.arange(self.M) + 1) % self.M] = 1.0
        return u

    def transfer_matrix(self) -> np.ndarray:
        """Adjoint (= inverse) of the Koopman matrix; pushes densities forward."""
        return self.koopman_matrix().T


class FourierObservable:
    """Band-limited function on the d-torus, stored as multi-index -> coefficient.

    The represented function is f(theta) = sum_j c_j exp(i j.theta).  A real
    valued function requires c_{-j} = conj(c_j) for every stored index.
    """

    __slots__ = ("coeffs", "d")

    def __init__(self, coeffs: dict, d: int | None = None):
        items = {}
        for j, c in coeffs.items():
            key = (int(j),) if np.isscalar(j) else tuple(int(v) for v in j)
            items[key] = complex(c)
        if d is None:
            if not items:
                raise ValidationError("dimension required for an empty observable")
            d = len(next(iter(items)))
        for key in items:
            if len(key) != d:
                raise ValidationError(f"index {key} does not have dimension {d}")
        self.coeffs = items
        self.d = d

    @classmethod
    def constant(cls, value: complex, d: int = 1) -> "FourierObservable":
        return cls({(0,) * d: value}, d=d)

    @classmethod
    def harmonic(cls, j, value: complex = 1.0) -> "FourierObservable":
        key = (int(j),) if np.isscalar(j) else tuple(int(v) for v in j)
        return cls({key: value}, d=len(key))

    @property
    def bandwidth(self) -> int:
        if not self.coeffs:
            return 0
        return max(max(abs(v) for v in j) for j in self.coeffs)

    def evaluate(self, theta) -> complex:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        total = 0.0 + 0.0j
        for j, c in self.coeffs.items():
            total += c * np.exp(1j * float(np.dot(j, theta)))
        return total

    def conjugate(self) -> "FourierObservable":
        return FourierObservable(
            {tuple(-v for v in j): c.conjugate() for j, c in self.coeffs.items()},
            d=self.d,
        )

    def is_real(self, tol: float = 1e-12) -> bool:
        for j, c in self.coeffs.items():
            mirror = self.coeffs.get(tuple(-v for v in j), 0.0)
            if abs(mirror - c.conjugate()) > tol:
                return False
        return True

    def scaled(self, factor: complex) -> "FourierObservable":
        return FourierObservable(
            {j: factor * c for j, c in self.coeffs.items()}, d=self.d
        )

    def plus(self, other: "FourierObservable") -> "FourierObservable":
        if other.d != self.d:
            raise ValidationError("dimension mismatch")
        out = dict(self.coeffs)
        for j, c in other.coeffs.items():
            out[j] = out.get(j, 0.0) + c
        return FourierObservable(out, d=self.d)

    def l2_norm(self) -> float:
        """Norm of the coefficient vector (= L2(mu) norm of the function)."""
        return math.sqrt(sum(abs(c) ** 2 for c in self.coeffs.values()))

    def grid_values(self, grid_size: int) -> np.ndarray:
        """Values on the uniform grid (2*pi*k/G)_k, for quadrature checks."""
        axes = [np.arange(grid_size) * (TWO_PI / grid_size)] * self.d
        mesh = np.meshgrid(*axes, indexing="ij")
        total = np.zeros([grid_size] * self.d, dtype=complex)
        for j, c in self.coeffs.items():
            phase = np.zeros_like(total, dtype=float)
            for axis, jv in enumerate(j):
                phase = phase + jv * mesh[axis]
            total += c * np.exp(1j * phase)
        return total


def koopman_exact(f: FourierObservable, sys: RotationSystem, t: float) -> FourierObservable:
    """Exact Koopman image U^t f = f o Phi^t: c_j -> exp(i t j.alpha) c_j.

    This is the oracle every forecast in the package is compared against.
    """
    if f.d != sys.d:
        raise ValidationError("observable and system dimensions differ")
    return FourierObservable(
        {
            j: c * complex(np.exp(1j * t * float(np.dot(j, sys.alpha))))
            for j, c in f.coeffs.items()
        },
        d=f.d,
    )


def bessel_ratios(kappa: float, jmax: int) -> np.ndarray:
    """Ratios I_j(kappa)/I_0(kappa) for j = 0..jmax, by backward recurrence.

    Uses Miller's algorithm: run I_{m-1} = I_{m+1} + (2m/kappa) I_m downward
    from a trial start well above jmax and normalize by the computed I_0.
    The start index is doubled until the head of the sequence stabilizes to
    ~1e-15 relative, which keeps the relative error comfortably below 1e-12.
    """
    if kappa < 0:
        raise ValidationError("concentration must be nonnegative")
    if kappa == 0.0:
        out = np.zeros(jmax + 1)
        out[0] = 1.0
        return out

    def run(start: int) -> np.ndarray:
        vals = np.zeros(start + 2)
        vals[start + 1] = 0.0
        vals[start] = 1.0
        for m in range(start, 0, -1):
            vals[m - 1] = vals[m + 1] + (2.0 * m / kappa) * vals[m]
            if vals[m - 1] > 1e250:  # rescale to dodge overflow
                vals /= vals[m - 1]
        return vals[: jmax + 1] / vals[0]

    start = jmax + max(20, int(2.0 * math.sqrt(max(jmax, kappa) + 1)) + 10)
    prev = run(start)
    for _ in range(12):
        start *= 2
        cur = run(start)
        scale = np.maximum(np.abs(cur), 1e-300)
        if np.max(np.abs(cur - prev) / scale) < 1e-15:
            return cur
        prev = cur
    return prev


@dataclass(frozen=True)
class VonMisesDensity:
    """Product von Mises density p(theta) = prod_i exp(kappa_i cos(theta_i - mu_i))/I_0(kappa_i)."""

    mu: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        mu = wrap_angles(self.mu)
        kappa = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        if mu.shape != kappa.shape:
            raise ValidationError("mu and kappa must have equal length")
        if np.any(kappa < 0):
            raise ValidationError("kappa entries must be nonnegative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", kappa)

    @property
    def d(self) -> int:
        return self.mu.size

    def density(self, theta) -> float:
        from scipy.special import i0e

        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        value = 1.0
        for i in range(self.d):
            value *= math.exp(self.kappa[i] * (math.cos(theta[i] - self.mu[i]) - 1.0))
            value /= i0e(self.kappa[i])
        return value

    def nth_root(self, n: int) -> "VonMisesDensity":
        """The normalized density proportional to p^(1/n): same family, kappa/n."""
        if n < 1:
            raise ValidationError("root order must be >= 1")
        return VonMisesDensity(self.mu, self.kappa / n)


def von_mises_fourier(p: VonMisesDensity, bandwidth: int) -> FourierObservable:
    """Fourier coefficients of a von Mises density, truncated to |j_i| <= bandwidth.

    Per factor the coefficient at frequency j is I_|j|(kappa)/I_0(kappa)
    times the location phase exp(-i j mu); the product density multiplies
    these across dimensions.
    """
    if bandwidth < 0:
        raise ValidationError("bandwidth must be >= 0")
    per_dim = []
    for i in range(p.d):
        ratios = bessel_ratios(p.kappa[i], bandwidth)
        one = {
            j: ratios[abs(j)] * complex(np.exp(-1j * j * p.mu[i]))
            for j in range(-bandwidth, bandwidth + 1)
        }
        per_dim.append(one)
    coeffs = {(): 1.0 + 0.0j}
    for one in per_dim:
        coeffs = {
            key + (j,): c * cj for key, c in coeffs.items() for j, cj in one.items()
        }
    return FourierObservable(coeffs, d=p.d)


def format_trajectory_csv(times, points) -> str:
    """CSV text for a trajectory: header t,theta_0,... and 17-significant-digit rows."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    times = np.asarray(times, dtype=float)
    d = points.shape[1]
    lines = ["t," + ",".join(f"theta_{i}" for i in range(d))]
    for t, row in zip(times, points):
        lines.append(",".join(format(v, ".17g") for v in (t, *row)))
    return "\n".join(lines) + "\n"
