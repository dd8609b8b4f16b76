"""Simulated qubit realization of torus rotations with pure point spectra.

Lattice indices j with 0 < |j_i| <= 2^q per dimension map bijectively onto
n = d(q+1) qubit basis states.  Because the index decoded from the bits is
affine in the bits, the projected generator diag(i omega) decomposes into a
sum of single-qubit Z terms whose coefficients come from the Walsh
(parity-function) transform of the frequency vector, with vanishing constant
term and no weight >= 2 content.  The induced unitary therefore factorizes
into n independent single-qubit phase rotations: evolution costs O(n 2^n)
scalar work on a statevector and never materializes a 2^n x 2^n matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import FourierObservable, RotationSystem
from .errors import NotAffineError, ValidationError
from .rkha import SubexpWeight


@dataclass(frozen=True)
class QubitEncoding:
    """Bijection between J_q^d (indices with 0 < |j_i| <= 2^q) and n-bit strings.

    Within each dimension the integer j maps to j + 2^q (j < 0) or
    j + 2^q - 1 (j > 0), written as q+1 bits most-significant-first; the d
    groups are concatenated, qubit 0 being the most significant bit of the
    first dimension.
    """

    d: int
    q: int

    def __post_init__(self):
        if self.d < 1 or self.q < 0:
            raise ValidationError("need d >= 1 and q >= 0")

    @property
    def n_qubits(self) -> int:
        return self.d * (self.q + 1)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def encode(self, j) -> int:
        j = np.atleast_1d(np.asarray(j, dtype=int))
        if j.size != self.d:
            raise ValidationError(f"index must have dimension {self.d}")
        half = 2**self.q
        index = 0
        for ji in j:
            if ji == 0 or abs(ji) > half:
                raise ValidationError(f"component {ji} outside the encodable set")
            jt = ji + half if ji < 0 else ji + half - 1
            index = (index << (self.q + 1)) | int(jt)
        return index

    def bits(self, j) -> tuple:
        index = self.encode(j)
        return tuple((index >> (self.n_qubits - 1 - i)) & 1 for i in range(self.n_qubits))

    def decode(self, index: int):
        if not (0 <= index < self.dim):
            raise ValidationError("basis index out of range")
        half = 2**self.q
        width = self.q + 1
        groups = []
        rem = index
        for _ in range(self.d):
            groups.append(rem & (2**width - 1))
            rem >>= width
        out = []
        for jt in reversed(groups):  # low bits hold the last dimension
            j = jt - half
            if j >= 0:
                j += 1
            out.append(int(j))
        return tuple(out)

    def index_table(self) -> np.ndarray:
        """Decoded multi-index for every computational basis state."""
        return np.array([self.decode(b) for b in range(self.dim)], dtype=int)


def frequency_vector(enc: QubitEncoding, sys: RotationSystem) -> np.ndarray:
    """Frequency j.alpha of the decoded index at every basis state."""
    if sys.d != enc.d:
        raise ValidationError("system and encoding dimensions differ")
    return enc.index_table() @ sys.alpha


def _walsh_transform(values: np.ndarray, n: int) -> np.ndarray:
    """Coefficients over parity subsets: (1/2^n) sum_b f(b) prod_{i in S}(-1)^{b_i}."""
    cube = np.array(values, dtype=float).reshape((2,) * n)
    for axis in range(n):
        plus = np.take(cube, 0, axis=axis)
        minus = np.take(cube, 1, axis=axis)
        cube = np.stack((plus + minus, plus - minus), axis=axis)
    return cube.reshape(-1) / values.size


@dataclass(frozen=True)
class WalshCoefficients:
    """Per-qubit purely imaginary Z coefficients of the projected generator.

    Entry i multiplies Z on qubit i; the reconstructed diagonal
    sum_i v_i (-1)^{b_i} equals i times the frequency at basis state b.
    """

    v: np.ndarray  # length n, purely imaginary

    @property
    def n_qubits(self) -> int:
        return self.v.size


def walsh_coefficients(freqs: np.ndarray, rel_tol: float = 1e-10) -> WalshCoefficients:
    """Extract the n weight-1 Walsh coefficients of a frequency vector.

    Raises if the constant term or any weight >= 2 coefficient exceeds
    rel_tol times max|freq|, since that breaks the single-qubit phase
    factorization of the evolution.
    """
    size = freqs.size
    n = size.bit_length() - 1
    if 2**n != size:
        raise ValidationError("frequency vector length must be a power of two")
    coeffs = _walsh_transform(freqs, n)
    scale = float(np.max(np.abs(freqs))) or 1.0
    weight_one = np.zeros(n)
    for s in range(size):
        weight = bin(s).count("1")
        if weight == 1:
            # axis k of the cube is qubit k, most significant bit first
            qubit = n - 1 - int(math.log2(s))
            weight_one[qubit] = coeffs[s]
        elif abs(coeffs[s]) > rel_tol * scale:
            raise NotAffineError(
                f"Walsh coefficient of weight {weight} at mask {s:#b} is "
                f"{coeffs[s]:.3e}; frequencies are not affine in the bits"
            )
    return WalshCoefficients(v=1j * weight_one)


def evolve_statevector(coeffs: WalshCoefficients, psi: np.ndarray, t: float) -> np.ndarray:
    """Apply exp(t sum_i v_i Z_i) by n independent per-qubit phase pairs.

    Work and memory are O(n 2^n); no 2^n x 2^n operator is ever formed.
    """
    n = coeffs.n_qubits
    if psi.size != 2**n:
        raise ValidationError("statevector length does not match the qubit count")
    cube = np.array(psi, dtype=complex).reshape((2,) * n)
    for i in range(n):
        shape = [1] * n
        shape[i] = 2
        phases = np.exp(np.array([t * coeffs.v[i], -t * coeffs.v[i]])).reshape(shape)
        cube = cube * phases
    return cube.reshape(-1)


def feature_amplitudes(enc: QubitEncoding, w: SubexpWeight, x) -> np.ndarray:
    """Unnormalized feature-state amplitudes sqrt(lambda(j)) exp(-i j.x) per state."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = enc.index_table()
    lam = np.exp(-w.tau * np.sum(np.abs(table) ** w.p, axis=1))
    return np.sqrt(lam) * np.exp(-1j * (table @ x))


def feature_state(enc: QubitEncoding, w: SubexpWeight, x) -> np.ndarray:
    amps = feature_amplitudes(enc, w, x)
    return amps / np.linalg.norm(amps)


def projected_observable(
    enc: QubitEncoding, w: SubexpWeight, f: FourierObservable
) -> np.ndarray:
    """Symmetrized multiplier of f on the encoded subspace, a Hermitian matrix.

    The raw multiplier has entries c(i-j) sqrt(lambda(j)/lambda(i)); only the
    symmetrization (M + M*)/2 is a measurable observable, and its feature
    state expectations agree with the raw multiplier's for real f.
    """
    if not f.is_real():
        raise ValidationError("observable must be real-valued (conjugate-symmetric)")
    table = enc.index_table()
    log_lam = -w.tau * np.sum(np.abs(table) ** w.p, axis=1)
    m = np.zeros((enc.dim, enc.dim), dtype=complex)
    for a in range(enc.dim):
        for b in range(enc.dim):
            key = tuple(int(v) for v in (table[a] - table[b]))
            c = f.coeffs.get(key)
            if c is not None:
                m[a, b] = c * math.exp(0.5 * (log_lam[b] - log_lam[a]))
    return 0.5 * (m + m.conj().T)


def circuit_expectation(
    enc: QubitEncoding,
    w: SubexpWeight,
    sys: RotationSystem,
    f: FourierObservable,
    x,
    t: float,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """Expectation of the symmetrized multiplier in the evolved feature state.

    The state evolves with exp(-t V) (state-side evolution; the sign is what
    makes the value track f composed with the forward flow, and is locked by
    a regression test).  With ``shots`` the expectation is estimated by
    sampling measurement outcomes in the observable's eigenbasis with a
    seeded generator instead of being computed exactly.
    """
    freqs = frequency_vector(enc, sys)
    coeffs = walsh_coefficients(freqs)
    psi = feature_state(enc, w, x)
    psi_t = evolve_statevector(coeffs, psi, -t)
    s_f = projected_observable(enc, w, f)
    if shots is None:
        return float(np.vdot(psi_t, s_f @ psi_t).real)
    eigenvalues, vectors = np.linalg.eigh(s_f)
    probs = np.abs(vectors.conj().T @ psi_t) ** 2
    probs = np.maximum(probs, 0.0)
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(eigenvalues, size=shots, p=probs)
    return float(np.mean(outcomes))


def export_circuit(
    coeffs: WalshCoefficients,
    enc: QubitEncoding,
    t: float,
    prep: np.ndarray | None = None,
) -> str:
    """Deterministic text form of the factorized evolution.

    One Z-rotation line per qubit with angle theta_i = -2 t Im(v_i) (the
    standard rz convention reproduces the per-qubit phases exactly); state
    preparation and measurement are described as amplitude lists rather than
    synthesized into gates.
    """
    lines = [
        "# diagonal phase circuit",
        f"# n={enc.n_qubits} d={enc.d} q={enc.q} t={format(t, '.17g')}",
    ]
    for i in range(enc.n_qubits):
        theta = -2.0 * t * float(coeffs.v[i].imag)
        lines.append(f"rz({format(theta, '.17g')}) q[{i}]")
    lines.append("# state preparation amplitudes (computational basis order)")
    if prep is not None:
        for k, a in enumerate(prep):
            lines.append(
                f"prep[{k}] {format(a.real, '.17g')} {format(a.imag, '.17g')}"
            )
    lines.append("# measurement: amplitude-list expectation of the exported observable")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str):
    """Invert export_circuit: returns (n, d, q, t, angles, prep or None)."""
    n = d = q = None
    t = 0.0
    angles = []
    prep = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("# n="):
            parts = dict(p.split("=") for p in line[2:].split())
            n, d, q, t = int(parts["n"]), int(parts["d"]), int(parts["q"]), float(parts["t"])
        elif line.startswith("rz("):
            angle, rest = line[3:].split(")")
            angles.append(float(angle))
        elif line.startswith("prep["):
            idx, re_part, im_part = line[5:].replace("]", "").split()
            prep[int(idx)] = float(re_part) + 1j * float(im_part)
    if n is None or len(angles) != n:
        raise ValidationError("circuit text is missing the header or rotation lines")
    prep_vec = None
    if prep:
        prep_vec = np.zeros(2**n, dtype=complex)
        for k, a in prep.items():
            prep_vec[k] = a
    return n, d, q, t, np.array(angles), prep_vec


def simulate_exported(text: str) -> np.ndarray:
    """Replay an exported circuit: rz phase pairs applied to the prep amplitudes."""
    n, _, _, _, angles, prep = parse_circuit(text)
    if prep is None:
        raise ValidationError("circuit text carries no preparation amplitudes")
    cube = prep.reshape((2,) * n)
    for i in range(n):
        shape = [1] * n
        shape[i] = 2
        phases = np.exp(np.array([-0.5j * angles[i], 0.5j * angles[i]])).reshape(shape)
        cube = cube * phases
    return cube.reshape(-1)
