"""Skew-adjoint generators on the truncated basis and their unitary groups.

For a torus rotation the generator is diagonal on the scaled characters with
eigenfrequencies omega_j = j.alpha ("analytic" kind).  A data-driven
substitute estimates the same matrix from one trajectory by tapered ergodic
averages of central finite differences, then enforces skew-adjointness by
antisymmetrization and pins the constant function as an exact null vector by
deflation.  Either kind generates a unitary group; exponentials are taken by
unitary diagonalization of the skew-Hermitian matrix rather than series
summation, so the result is unitary up to eigensolver tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import FourierObservable, RotationSystem
from .errors import RankDeficiencyError, ValidationError
from .rkha import SubexpWeight, TruncatedLattice

ANALYTIC = "analytic"
DATA_DRIVEN = "data-driven"


@dataclass(frozen=True)
class GeneratorSpec:
    """A skew-adjoint generator on a truncated lattice basis.

    ``matrix`` is the generator in the lattice-ordered coefficient basis;
    ``eigen_omega``/``eigen_vectors`` hold its eigendecomposition
    matrix = V diag(i omega) V*, sorted by |omega| with positive frequencies
    first.  For the analytic kind ``omega_lattice`` additionally gives the
    frequency at each lattice position (the basis itself diagonalizes).
    """

    lattice: TruncatedLattice
    kind: str
    matrix: np.ndarray
    eigen_omega: np.ndarray
    eigen_vectors: np.ndarray
    omega_lattice: np.ndarray | None = None

    def __post_init__(self):
        a = self.matrix
        if np.max(np.abs(a + a.conj().T)) > 1e-12:
            raise ValidationError("generator matrix is not skew-adjoint")

    def omega_at(self, j) -> float:
        if self.omega_lattice is None:
            raise ValidationError("per-index frequencies exist only for the analytic kind")
        return float(self.omega_lattice[self.lattice.position(j)])


def _sorted_eigensystem(omega: np.ndarray, vectors: np.ndarray):
    # |omega| ascending, positive member of each +/- pair first, stable tie-break
    order = np.lexsort(
        (np.arange(omega.size), (omega < 0).astype(int), np.round(np.abs(omega), 12))
    )
    return omega[order], vectors[:, order]


def analytic_generator(sys: RotationSystem, lat: TruncatedLattice) -> GeneratorSpec:
    """Exact rotation generator: diagonal with omega_j = j.alpha on the lattice."""
    if sys.d != lat.d:
        raise ValidationError("system and lattice dimensions differ")
    omega = lat.indices @ sys.alpha
    matrix = np.diag(1j * omega)
    eig_omega, eig_vectors = _sorted_eigensystem(omega.copy(), np.eye(lat.size, dtype=complex))
    return GeneratorSpec(
        lattice=lat,
        kind=ANALYTIC,
        matrix=matrix,
        eigen_omega=eig_omega,
        eigen_vectors=eig_vectors,
        omega_lattice=omega,
    )


def _taper_weights(m: int) -> np.ndarray:
    """Normalized bump-window weights for ergodic averages along a trajectory.

    The smooth window exp(-1/(u(1-u))) vanishes to all orders at the ends,
    which suppresses the finite-trajectory boundary error of quasi-periodic
    averages far below the estimator's finite-difference bias.
    """
    u = (np.arange(m) + 1.0) / (m + 1.0)
    w = np.exp(-1.0 / (u * (1.0 - u)))
    return w / w.sum()


def data_driven_generator(
    samples: np.ndarray, dt: float, lat: TruncatedLattice
) -> GeneratorSpec:
    """Galerkin estimate of the generator from one sampled trajectory.

    The raw matrix is the tapered ergodic average of
    conj(gamma_j(x_n)) * (gamma_k(x_{n+1}) - gamma_k(x_{n-1})) / (2 dt),
    antisymmetrized to enforce skew-adjointness and deflated so the constant
    function is an exact null vector.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if dt <= 0:
        raise ValidationError("dt must be positive")
    if samples.shape[1] != lat.d:
        raise ValidationError("trajectory and lattice dimensions differ")
    n = samples.shape[0]
    interior = n - 2
    if interior < lat.size:
        raise RankDeficiencyError(
            f"trajectory supplies {max(interior, 0)} usable samples for a basis of "
            f"size {lat.size}; {lat.size - max(interior, 0)} directions are unresolved",
            deficiency=lat.size - max(interior, 0),
        )
    basis = np.exp(1j * (samples @ lat.indices.T))  # (n, lat.size)
    diff = (basis[2:] - basis[:-2]) / (2.0 * dt)
    w = _taper_weights(interior)
    a = (basis[1:-1].conj() * w[:, None]).T @ diff
    a = 0.5 * (a - a.conj().T)
    zero = lat.position((0,) * lat.d)
    a[zero, :] = 0.0
    a[:, zero] = 0.0
    omega, vectors = np.linalg.eigh(-1j * a)
    eig_omega, eig_vectors = _sorted_eigensystem(omega, vectors)
    return GeneratorSpec(
        lattice=lat,
        kind=DATA_DRIVEN,
        matrix=a,
        eigen_omega=eig_omega,
        eigen_vectors=eig_vectors,
    )


def evolve(gen: GeneratorSpec, f: FourierObservable, t: float) -> FourierObservable:
    """Unitary evolution exp(t * generator) applied to a band-limited observable."""
    vec = gen.lattice.observable_vector(f)
    if gen.kind == ANALYTIC:
        out = np.exp(1j * t * gen.omega_lattice) * vec
    else:
        v = gen.eigen_vectors
        out = v @ (np.exp(1j * t * gen.eigen_omega) * (v.conj().T @ vec))
    return gen.lattice.vector_observable(out)


def smoothing_identity_residual(
    w: SubexpWeight, gen: GeneratorSpec, f: FourierObservable, t: float
) -> float:
    """Residual of the two equivalent smoothed-evolution sandwiches.

    Compares K* exp(tW) K f against G_half exp(tV) G_half f in coefficient
    space, where K carries sqrt(lambda) per index, G_half carries the
    half-parameter weight, and W and V share the same matrix under the
    coefficient identification of the two bases.  For diagonal generators the
    two sides agree to roundoff; the returned value is the l2 norm of their
    difference.
    """
    lat = gen.lattice
    vec = lat.observable_vector(f)
    lam = w.lattice_values(lat)
    half = w.half().lattice_values(lat)

    def propagate(v):
        if gen.kind == ANALYTIC:
            return np.exp(1j * t * gen.omega_lattice) * v
        u = gen.eigen_vectors
        return u @ (np.exp(1j * t * gen.eigen_omega) * (u.conj().T @ v))

    left = np.sqrt(lam) * propagate(np.sqrt(lam) * vec)
    right = half * propagate(half * vec)
    return float(np.linalg.norm(left - right))


def frequency_table(gen: GeneratorSpec, reference: GeneratorSpec | None = None):
    """Rows (index, omega, abs error vs the reference generator's spectrum)."""
    rows = []
    ref = None if reference is None else np.sort(reference.eigen_omega)
    for k, om in enumerate(gen.eigen_omega):
        if ref is None:
            err = 0.0
        else:
            err = float(np.min(np.abs(ref - om)))
        rows.append((k, float(om), err))
    return rows
