"""Classical Bayesian filtering next to its density-operator formulation.

States of the classical filter are probability densities against the
invariant measure; the operator formulation replaces them by rank-1
projectors onto the square-root density, observations by effects (positive
operators below the identity), and the Bayes update by conjugation with the
effect's square root.  On a finite periodic orbit both filters are exactly
finite-dimensional and agree to machine precision; finite-rank compression
of the operator filter preserves positivity but leaves the exactly
classical world, which is what the projected mode exercises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    TWO_PI,
    FourierObservable,
    PeriodicOrbitSystem,
    RotationSystem,
    VonMisesDensity,
    bessel_ratios,
    koopman_exact,
    wrap_angles,
)
from .errors import (
    DegenerateNormalizationError,
    ValidationError,
    ZeroEvidenceError,
)
from .rkha import TruncatedLattice

GAUSSIAN = "gaussian"
VON_MISES = "vonmises"
EVENT = "event"


def trace_norm(a: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def check_density(values: np.ndarray, mu: np.ndarray, tol: float = 1e-10):
    if np.min(values) < -tol:
        raise ValidationError("density has a negative value")
    total = float(np.dot(mu, values))
    if abs(total - 1.0) > tol:
        raise ValidationError(f"density integrates to {total}, not 1")


def check_density_operator(rho: np.ndarray, tol: float = 1e-10):
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValidationError("density operator is not Hermitian")
    eigs = np.linalg.eigvalsh(rho)
    if eigs.min() < -tol:
        raise ValidationError(f"density operator has eigenvalue {eigs.min()}")
    if abs(np.trace(rho).real - 1.0) > 1e-12:
        raise ValidationError("density operator trace differs from 1")


def check_effect(e: np.ndarray, tol: float = 1e-10):
    if np.max(np.abs(e - e.conj().T)) > 1e-12:
        raise ValidationError("effect is not Hermitian")
    eigs = np.linalg.eigvalsh(e)
    if eigs.min() < -tol or eigs.max() > 1.0 + tol:
        raise ValidationError("effect eigenvalues leave [0, 1]")


def embed_density(sigma: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Rank-1 projector onto the unit vector sqrt(sigma) in the mu-weighted space.

    In the orthonormal point basis the matrix entries are
    sqrt(mu_i sigma_i) * sqrt(mu_j sigma_j); the trace is exactly 1.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.max(sigma) <= 0:
        raise ValidationError("cannot embed an identically zero density")
    amp = np.sqrt(np.maximum(mu * sigma, 0.0))
    return np.outer(amp, amp).astype(complex)


def classical_forecast(sys: PeriodicOrbitSystem, sigma: np.ndarray) -> np.ndarray:
    """Push the density forward one step: values permute along the orbit."""
    return np.roll(np.asarray(sigma, dtype=float), 1)


def classical_forecast_rotation(
    sys: RotationSystem, density: FourierObservable, dt: float
) -> FourierObservable:
    """Transport a torus density forward by dt: c_j picks up exp(-i dt j.alpha)."""
    return koopman_exact(density, sys, -dt)


def classical_analysis(sigma: np.ndarray, likelihood: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Bayes update: pointwise product with the likelihood, renormalized."""
    sigma = np.asarray(sigma, dtype=float)
    likelihood = np.asarray(likelihood, dtype=float)
    if np.min(likelihood) < 0:
        raise ValidationError("likelihood must be nonnegative")
    evidence = float(np.dot(mu, sigma * likelihood))
    if evidence <= 1e-300:
        raise ZeroEvidenceError("observation has zero evidence under the prior")
    return sigma * likelihood / evidence


def quantum_forecast(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Conjugate the state by the given unitary: rho -> u rho u*."""
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > 1e-10:
        raise ValidationError("forecast operator is not unitary")
    return u @ rho @ u.conj().T


def effect_sqrt(e: np.ndarray) -> np.ndarray:
    """Positive square root of an effect, eigenvalues clamped into [0, 1]."""
    eigs, vecs = np.linalg.eigh(0.5 * (e + e.conj().T))
    eigs = np.clip(eigs, 0.0, 1.0)
    return (vecs * np.sqrt(eigs)) @ vecs.conj().T


def quantum_analysis(rho: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Operator Bayes rule: sqrt(e) rho sqrt(e), renormalized to unit trace."""
    evidence = float(np.trace(rho @ e).real)
    if evidence <= 1e-14:
        raise ZeroEvidenceError("effect has zero evidence under the state")
    root = effect_sqrt(e)
    posterior = root @ rho @ root
    return posterior / np.trace(posterior).real


def compress(matrix: np.ndarray, rank: int, renormalize_trace: bool = False) -> np.ndarray:
    """Top-left rank x rank block in the fixed basis ordering.

    Compression is linear and positivity preserving.  With
    ``renormalize_trace`` the block is rescaled to unit trace (density
    operators); a vanishing compressed trace is rejected.
    """
    n = matrix.shape[0]
    if not (1 <= rank <= n):
        raise ValidationError(f"rank must lie in [1, {n}]")
    block = np.array(matrix[:rank, :rank])
    if renormalize_trace:
        tr = float(np.trace(block).real)
        if tr <= 1e-300:
            raise DegenerateNormalizationError("compressed density has zero trace")
        block /= tr
    return block


def multiplication_operator_point(f_values: np.ndarray) -> np.ndarray:
    return np.diag(np.asarray(f_values, dtype=complex))


def multiplication_operator_fourier(coeffs: dict, lat: TruncatedLattice) -> np.ndarray:
    """Matrix of multiplication by sum_m c_m gamma_m on the lattice basis.

    Entries are c(i - j); a real multiplier (conjugate-symmetric c) gives a
    Hermitian Toeplitz-style matrix.
    """
    n = lat.size
    out = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            m = tuple(int(v) for v in (lat.indices[a] - lat.indices[b]))
            c = coeffs.get(m)
            if c is not None:
                out[a, b] = c
    return out


def expectation_classical(sigma: np.ndarray, f: np.ndarray, mu: np.ndarray) -> complex:
    return complex(np.dot(mu, np.asarray(sigma) * np.asarray(f)))


def expectation_quantum(rho: np.ndarray, a: np.ndarray) -> complex:
    return complex(np.trace(rho @ a))


def consistency_chain_gap(sys: PeriodicOrbitSystem, sigma: np.ndarray, f: np.ndarray) -> float:
    """Largest pairwise gap among the four equivalent one-step expectations.

    E_sigma(U f), E_{P sigma}(f), E_{Gamma(sigma)}(U M_f U*), and
    E_{P Gamma(sigma)}(M_f) must agree for any density and observable.
    """
    mu = sys.mu
    u = sys.koopman_matrix().astype(complex)
    uf = u @ np.asarray(f, dtype=complex)
    p_sigma = classical_forecast(sys, sigma)
    rho = embed_density(sigma, mu)
    m_f = multiplication_operator_point(f)
    values = [
        expectation_classical(sigma, uf, mu),
        expectation_classical(p_sigma, f, mu),
        expectation_quantum(rho, u @ m_f @ u.conj().T),
        expectation_quantum(u.conj().T @ rho @ u, m_f),
    ]
    return max(
        abs(a - b) for i, a in enumerate(values) for b in values[i + 1 :]
    )


@dataclass(frozen=True)
class ObservationModel:
    """Observation map plus a kernel likelihood in [0, 1].

    kind "gaussian": kappa(y, v) = exp(-(y-v)^2 / (2 scale^2))
    kind "vonmises": kappa(y, v) = exp(scale (cos(y-v) - 1)), circular values
    kind "event":    kappa(y, v) = 1 if |y - v| <= scale/2 else 0
    ``noise_std`` is the standard deviation of additive Gaussian observation
    noise used when generating synthetic observations.
    """

    kind: str = VON_MISES
    scale: float = 4.0
    noise_std: float = 0.0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, VON_MISES, EVENT):
            raise ValidationError(f"unknown observation kind {self.kind!r}")
        if self.scale <= 0:
            raise ValidationError("scale must be positive")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be nonnegative")

    def kappa(self, y: float, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.kind == GAUSSIAN:
            return np.exp(-((y - values) ** 2) / (2.0 * self.scale**2))
        if self.kind == VON_MISES:
            return np.exp(self.scale * (np.cos(y - values) - 1.0))
        return (np.abs(y - values) <= self.scale / 2.0).astype(float)

    def observe(self, true_value: float, rng: np.random.Generator) -> float:
        y = true_value
        if self.noise_std > 0:
            y = y + self.noise_std * rng.standard_normal()
        if self.kind == VON_MISES:
            y = float(wrap_angles(y)[0])
        return y

    def fourier_coeffs(self, y: float, bandwidth: int) -> dict:
        """Fourier coefficients of x -> kappa(y, x) on the circle (d=1)."""
        out = {}
        if self.kind == VON_MISES:
            # coefficient at frequency m of exp(scale(cos u - 1)) is I_m(scale) e^{-scale}
            from scipy.special import i0e

            base = bessel_ratios(self.scale, bandwidth)
            scale0 = float(i0e(self.scale))
            for m in range(-bandwidth, bandwidth + 1):
                out[(m,)] = base[abs(m)] * scale0 * complex(np.exp(-1j * m * y))
            return out
        if self.kind == EVENT:
            half = self.scale / 2.0
            for m in range(-bandwidth, bandwidth + 1):
                if m == 0:
                    mag = self.scale / TWO_PI
                else:
                    mag = math.sin(m * half) / (m * math.pi)
                out[(m,)] = mag * complex(np.exp(-1j * m * y))
            return out
        raise ValidationError("gaussian kernels are not periodic; use vonmises on the circle")


def effect_from_observation(model: ObservationModel, y: float, basis) -> np.ndarray:
    """Effect of observing y: the multiplication operator by x -> kappa(y, h(x)).

    ``basis`` selects the representation: an array of observation values per
    point gives the diagonal point-basis matrix; a TruncatedLattice gives the
    Toeplitz-style matrix on the Fourier basis (h the angular identity).
    """
    if isinstance(basis, TruncatedLattice):
        return multiplication_operator_fourier(model.fourier_coeffs(y, 2 * basis.J), basis)
    return multiplication_operator_point(model.kappa(y, np.asarray(basis, dtype=float)))


def orbit_observation_values(sys: PeriodicOrbitSystem) -> np.ndarray:
    """Default observation map on the orbit: point i is seen at angle 2 pi i / M."""
    return np.arange(sys.M) * (TWO_PI / sys.M)


def _orbit_mode_order(m: int) -> np.ndarray:
    """Cyclic-group frequencies ordered 0, +1, -1, +2, -2, ... as DFT rows."""
    freqs = [0]
    k = 1
    while len(freqs) < m:
        freqs.append(k)
        if len(freqs) < m:
            freqs.append(-k)
        k += 1
    return np.asarray(freqs)


def orbit_mode_transform(m: int) -> np.ndarray:
    """Unitary point-basis -> mode-basis map, rows ordered by |frequency|."""
    freqs = _orbit_mode_order(m)
    points = np.arange(m)
    return np.exp(-2j * math.pi * np.outer(freqs, points) / m) / math.sqrt(m)


@dataclass
class FilterStep:
    step: int
    evidence: float
    consistency: float
    estimate: float
    estimate_error: float
    truth: float


@dataclass
class FilterTrace:
    mode: str
    steps: list = field(default_factory=list)
    classical_posteriors: list = field(default_factory=list)
    quantum_posteriors: list = field(default_factory=list)

    def consistency_max(self) -> float:
        return max((s.consistency for s in self.steps), default=0.0)

    def estimate_match_fraction(self) -> float:
        hits = sum(1 for s in self.steps if s.estimate_error == 0.0)
        return hits / len(self.steps) if self.steps else 1.0


CLASSICAL = "classical"
QUANTUM = "quantum"
QUANTUM_PROJECTED = "quantum-projected"


def run_filter(
    sys: PeriodicOrbitSystem,
    model: ObservationModel,
    x0: int,
    steps: int,
    mode: str = QUANTUM,
    rank: int | None = None,
    seed: int = 0,
    sigma0: np.ndarray | None = None,
    observations=None,
) -> FilterTrace:
    """Run the filter on a periodic orbit and return the per-step trace.

    The classical filter always runs (it is the reference); quantum modes run
    alongside it and record the trace-norm distance between the embedded
    classical posterior and the operator posterior.  In projected mode every
    operator is compressed to the leading ``rank`` modes of the orbit's
    frequency basis before use.  Observations are synthesized from the true
    trajectory unless an explicit sequence is supplied.  A zero-evidence
    update aborts the run with the failing step index attached.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if observations is not None and len(observations) < steps:
        raise ValidationError(f"need {steps} observations, got {len(observations)}")
    if mode not in (CLASSICAL, QUANTUM, QUANTUM_PROJECTED):
        raise ValidationError(f"unknown filter mode {mode!r}")
    if mode == QUANTUM_PROJECTED:
        if rank is None or not (1 <= rank <= sys.M):
            raise ValidationError("projected mode needs a rank between 1 and M")

    rng = np.random.default_rng(seed)
    mu = sys.mu
    h_values = orbit_observation_values(sys)
    sigma = np.ones(sys.M) if sigma0 is None else np.asarray(sigma0, dtype=float)
    check_density(sigma, mu)

    u_point = sys.koopman_matrix().astype(complex)
    transfer_point = u_point.conj().T  # evolves states

    run_quantum = mode in (QUANTUM, QUANTUM_PROJECTED)
    if mode == QUANTUM:
        to_basis = np.eye(sys.M, dtype=complex)
        rank = sys.M
    elif mode == QUANTUM_PROJECTED:
        to_basis = orbit_mode_transform(sys.M)
    if run_quantum:
        transfer = compress(to_basis @ transfer_point @ to_basis.conj().T, rank)
        rho = compress(to_basis @ embed_density(sigma, mu) @ to_basis.conj().T, rank, True)

    trace = FilterTrace(mode=mode)
    x = int(x0) % sys.M
    for n in range(1, steps + 1):
        x = sys.step(x)
        if observations is None:
            y = model.observe(h_values[x], rng)
        else:
            y = float(observations[n - 1])
        likelihood = model.kappa(y, h_values)

        prior = classical_forecast(sys, sigma)
        try:
            sigma = classical_analysis(prior, likelihood, mu)
        except ZeroEvidenceError as err:
            raise ZeroEvidenceError(f"zero evidence at step {n}: {err}") from None
        evidence = float(np.dot(mu, prior * likelihood))
        trace.classical_posteriors.append(sigma.copy())

        consistency = 0.0
        marginals = sigma * mu
        if run_quantum:
            effect_point = multiplication_operator_point(likelihood)
            effect = compress(to_basis @ effect_point @ to_basis.conj().T, rank)
            rho_prior = transfer @ rho @ transfer.conj().T
            tr_prior = float(np.trace(rho_prior).real)
            if tr_prior <= 1e-14:
                raise ZeroEvidenceError(f"state annihilated by projection at step {n}")
            rho_prior /= tr_prior
            try:
                rho = quantum_analysis(rho_prior, effect)
            except ZeroEvidenceError as err:
                raise ZeroEvidenceError(f"zero evidence at step {n}: {err}") from None
            trace.quantum_posteriors.append(rho.copy())
            embedded = compress(
                to_basis @ embed_density(sigma, mu) @ to_basis.conj().T, rank
            )
            consistency = trace_norm(embedded - rho)
            rho_point = to_basis.conj().T[:, :rank] @ rho @ to_basis[:rank, :]
            marginals = np.maximum(np.diag(rho_point).real, 0.0)

        estimate = int(np.argmax(marginals))
        err_steps = min((estimate - x) % sys.M, (x - estimate) % sys.M)
        trace.steps.append(
            FilterStep(
                step=n,
                evidence=evidence,
                consistency=consistency,
                estimate=float(estimate),
                estimate_error=float(err_steps),
                truth=float(x),
            )
        )
    return trace


def _sqrt_von_mises_coeffs(mu: float, kappa: float, lat: TruncatedLattice) -> np.ndarray:
    """Unit lattice coefficients of sqrt of the von Mises density at (mu, kappa)."""
    j = lat.indices[:, 0]
    ratios = bessel_ratios(kappa / 2.0, lat.J)
    vec = ratios[np.abs(j)] * np.exp(-1j * j * mu)
    return vec / np.linalg.norm(vec)


def run_torus_filter(
    sys: RotationSystem,
    model: ObservationModel,
    x0: float,
    steps: int,
    dt: float,
    bandwidth: int = 32,
    kappa0: float = 6.0,
    mode: str = QUANTUM,
    rank: int | None = None,
    seed: int = 0,
    grid_size: int = 256,
) -> FilterTrace:
    """Filter a circle rotation: exact von Mises track vs truncated Fourier track.

    The classical filter stays inside the von Mises family (rotation shifts
    the location, the circular-kernel update adds concentration vectors), so
    it is exact.  The operator track evolves the square-root density's
    lattice coefficients, conditions by convolving with the square root of
    the observation kernel, and in projected mode truncates to the leading
    ``rank`` modes ordered 0, +1, -1, ...  The consistency column is the
    trace-norm distance between the two pure states on the lattice, and the
    wavefunction's most negative grid value is recorded: a projected
    square-root density generally stops being a nonnegative function even
    though the operator state stays positive.
    """
    if sys.d != 1:
        raise ValidationError("the torus filter is implemented for d=1")
    if model.kind != VON_MISES:
        raise ValidationError("torus filtering uses the circular observation kernel")
    if steps < 1 or dt <= 0:
        raise ValidationError("need steps >= 1 and dt > 0")
    if mode not in (CLASSICAL, QUANTUM, QUANTUM_PROJECTED):
        raise ValidationError(f"unknown filter mode {mode!r}")
    lat = TruncatedLattice(1, bandwidth)
    if mode == QUANTUM_PROJECTED:
        if rank is None or not (1 <= rank <= lat.size):
            raise ValidationError("projected mode needs a rank between 1 and the lattice size")
        keep = np.zeros(lat.size)
        for freq in _orbit_mode_order(lat.size)[:rank]:
            keep[lat.position((int(freq),))] = 1.0

    from scipy.special import i0e

    rng = np.random.default_rng(seed)
    alpha = float(sys.alpha[0])
    run_quantum = mode in (QUANTUM, QUANTUM_PROJECTED)
    # classical state as concentration vector (C, S) = kappa (cos mu, sin mu)
    c_vec = kappa0 * math.cos(x0)
    s_vec = kappa0 * math.sin(x0)
    if run_quantum:
        psi = _sqrt_von_mises_coeffs(float(x0), kappa0, lat)
        if mode == QUANTUM_PROJECTED:
            psi = psi * keep
            psi /= np.linalg.norm(psi)
    half_kernel = bessel_ratios(model.scale / 2.0, 2 * lat.J) * float(i0e(model.scale / 2.0))
    theta_grid = np.arange(grid_size) * TWO_PI / grid_size
    j_all = lat.indices[:, 0]

    trace = FilterTrace(mode=mode)
    x = float(wrap_angles(x0)[0])
    for n in range(1, steps + 1):
        x = float(wrap_angles(x + dt * alpha)[0])
        y = model.observe(x, rng)

        # exact conjugate-family update
        mu_prior = math.atan2(s_vec, c_vec) + dt * alpha
        kap_prior = math.hypot(c_vec, s_vec)
        c_vec = kap_prior * math.cos(mu_prior) + model.scale * math.cos(y)
        s_vec = kap_prior * math.sin(mu_prior) + model.scale * math.sin(y)
        kap_post = math.hypot(c_vec, s_vec)
        mu_post = math.atan2(s_vec, c_vec) % TWO_PI
        evidence = float(
            i0e(kap_post) / i0e(kap_prior) * math.exp(kap_post - kap_prior - model.scale)
        )
        if evidence <= 1e-300:
            raise ZeroEvidenceError(f"zero evidence at step {n}")

        consistency = 0.0
        min_sqrt = 0.0
        if run_quantum:
            psi = psi * np.exp(-1j * dt * alpha * j_all)
            m_all = np.arange(-2 * lat.J, 2 * lat.J + 1)
            kernel_coeffs = half_kernel[np.abs(m_all)] * np.exp(-1j * m_all * y)
            full = np.convolve(kernel_coeffs, psi)
            center = (full.size - 1) // 2
            psi = full[center - lat.J : center + lat.J + 1]
            if mode == QUANTUM_PROJECTED:
                psi = psi * keep
            norm = np.linalg.norm(psi)
            if norm <= 1e-150:
                raise ZeroEvidenceError(f"state annihilated at step {n}")
            psi = psi / norm
            reference = _sqrt_von_mises_coeffs(mu_post, kap_post, lat)
            overlap = abs(np.vdot(reference, psi))
            consistency = 2.0 * math.sqrt(max(0.0, 1.0 - overlap**2))
            values = np.exp(1j * np.outer(theta_grid, j_all)) @ psi
            phase = values[int(np.argmax(np.abs(values)))]
            min_sqrt = float((values * (phase.conjugate() / abs(phase))).real.min())
            first = complex(np.sum(np.conj(psi[1:]) * psi[:-1]))
            estimate = math.atan2(first.imag, first.real) % TWO_PI
        else:
            estimate = mu_post
        gap = abs((estimate - x + math.pi) % TWO_PI - math.pi)
        trace.classical_posteriors.append((mu_post, kap_post))
        if run_quantum:
            trace.quantum_posteriors.append((psi.copy(), min_sqrt))
        trace.steps.append(
            FilterStep(
                step=n,
                evidence=evidence,
                consistency=consistency,
                estimate=float(estimate),
                estimate_error=float(gap),
                truth=x,
            )
        )
    return trace
