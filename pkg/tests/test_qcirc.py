import itertools
import math
import tracemalloc

import numpy as np
import pytest
import scipy.linalg

from qkoopman.dynamics import FourierObservable, RotationSystem, koopman_exact
from qkoopman.errors import NotAffineError, ValidationError
from qkoopman.qcirc import (
    QubitEncoding,
    WalshCoefficients,
    circuit_expectation,
    evolve_statevector,
    export_circuit,
    feature_amplitudes,
    feature_state,
    frequency_vector,
    parse_circuit,
    projected_observable,
    simulate_exported,
    walsh_coefficients,
)
from qkoopman.rkha import SubexpWeight, TruncatedLattice

COS = FourierObservable({(1,): 0.5, (-1,): 0.5}, d=1)


class TestEncoding:
    def test_documented_bit_patterns(self):
        enc = QubitEncoding(d=1, q=1)
        assert enc.bits((-2,)) == (0, 0)
        assert enc.bits((1,)) == (1, 0)
        assert enc.bits((-1,)) == (0, 1)
        assert enc.bits((2,)) == (1, 1)

    def test_roundtrip_exhaustive_d2_q2(self):
        enc = QubitEncoding(d=2, q=2)
        values = [-4, -3, -2, -1, 1, 2, 3, 4]
        for j in itertools.product(values, values):
            assert enc.decode(enc.encode(j)) == j
        # and every basis state decodes into the index set
        for b in range(enc.dim):
            j = enc.decode(b)
            assert enc.encode(j) == b

    def test_zero_rejected(self):
        enc = QubitEncoding(d=1, q=2)
        with pytest.raises(ValidationError):
            enc.encode((0,))
        with pytest.raises(ValidationError):
            enc.encode((5,))


class TestFrequencyVector:
    def test_enumeration_oracle(self):
        enc = QubitEncoding(d=1, q=1)
        freqs = frequency_vector(enc, RotationSystem(np.array([1.0])))
        assert np.array_equal(freqs, [-2.0, -1.0, 1.0, 2.0])

    def test_zero_mean(self):
        enc = QubitEncoding(d=2, q=2)
        freqs = frequency_vector(enc, RotationSystem(np.array([math.sqrt(2.0), 0.3])))
        assert abs(freqs.mean()) < 1e-12

    def test_linear_in_alpha(self):
        enc = QubitEncoding(d=1, q=3)
        f1 = frequency_vector(enc, RotationSystem(np.array([1.3])))
        f2 = frequency_vector(enc, RotationSystem(np.array([2.6])))
        assert np.allclose(f2, 2.0 * f1)


class TestWalsh:
    def test_documented_example(self):
        enc = QubitEncoding(d=1, q=1)
        freqs = frequency_vector(enc, RotationSystem(np.array([1.0])))
        coeffs = walsh_coefficients(freqs)
        assert coeffs.v[0] == pytest.approx(1j * -1.5)
        assert coeffs.v[1] == pytest.approx(1j * -0.5)

    def test_dense_hadamard_oracle(self):
        enc = QubitEncoding(d=1, q=1)
        freqs = frequency_vector(enc, RotationSystem(np.array([1.0])))
        h = np.array([[1.0, 1.0], [1.0, -1.0]])
        h4 = np.kron(h, h)
        dense = h4 @ freqs / 4.0  # coefficient at mask s, bit order MSB-first
        coeffs = walsh_coefficients(freqs)
        assert dense[0b10] == pytest.approx(coeffs.v[0].imag)
        assert dense[0b01] == pytest.approx(coeffs.v[1].imag)
        assert abs(dense[0b00]) < 1e-12 and abs(dense[0b11]) < 1e-12

    def test_reconstruction(self):
        enc = QubitEncoding(d=2, q=2)
        sys = RotationSystem(np.array([math.sqrt(2.0), math.sqrt(3.0)]))
        freqs = frequency_vector(enc, sys)
        coeffs = walsh_coefficients(freqs)
        n = enc.n_qubits
        rebuilt = np.zeros(enc.dim)
        for b in range(enc.dim):
            signs = [1.0 if (b >> (n - 1 - i)) & 1 == 0 else -1.0 for i in range(n)]
            rebuilt[b] = sum(coeffs.v[i].imag * signs[i] for i in range(n))
        assert np.max(np.abs(rebuilt - freqs)) <= 1e-10

    @pytest.mark.parametrize("d", [1, 2])
    @pytest.mark.parametrize("q", [1, 2, 3, 4])
    def test_affinity_all_small_encodings(self, d, q):
        alpha = np.array([math.sqrt(2.0), math.sqrt(3.0)])[:d]
        enc = QubitEncoding(d=d, q=q)
        freqs = frequency_vector(enc, RotationSystem(alpha))
        walsh_coefficients(freqs)  # raises NotAffineError on failure

    def test_non_affine_rejected(self):
        freqs = np.array([0.0, 1.0, 1.0, 0.0])  # pure weight-2 parity
        with pytest.raises(NotAffineError):
            walsh_coefficients(freqs)

    def test_zero_frequencies(self):
        coeffs = walsh_coefficients(np.zeros(8))
        assert np.all(coeffs.v == 0)


class TestEvolveStatevector:
    def test_identity_at_t0(self):
        rng = np.random.default_rng(0)
        coeffs = WalshCoefficients(v=1j * rng.standard_normal(3))
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert np.allclose(evolve_statevector(coeffs, psi, 0.0), psi)

    def test_single_qubit_phases(self):
        coeffs = WalshCoefficients(v=np.array([0.7j]))
        psi = np.array([1.0 + 0j, 1.0 + 0j]) / math.sqrt(2)
        out = evolve_statevector(coeffs, psi, 2.0)
        assert out[0] == pytest.approx(psi[0] * np.exp(1.4j))
        assert out[1] == pytest.approx(psi[1] * np.exp(-1.4j))

    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_matches_dense_expm(self, n):
        rng = np.random.default_rng(n)
        v = 1j * rng.standard_normal(n)
        coeffs = WalshCoefficients(v=v)
        z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
        dense = np.zeros((2**n, 2**n), dtype=complex)
        for i in range(n):
            term = np.array([[1.0]], dtype=complex)
            for k in range(n):
                term = np.kron(term, z if k == i else np.eye(2))
            dense += v[i] * term
        for _ in range(20 if n <= 4 else 5):
            t = float(rng.uniform(-3, 3))
            psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
            psi /= np.linalg.norm(psi)
            fast = evolve_statevector(coeffs, psi, t)
            slow = scipy.linalg.expm(t * dense) @ psi
            assert np.max(np.abs(fast - slow)) <= 1e-10

    def test_unitary_and_group_law(self):
        rng = np.random.default_rng(5)
        coeffs = WalshCoefficients(v=1j * rng.standard_normal(4))
        psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        psi /= np.linalg.norm(psi)
        out = evolve_statevector(coeffs, psi, 1.3)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-13)
        two = evolve_statevector(coeffs, evolve_statevector(coeffs, psi, 0.4), 0.9)
        assert np.max(np.abs(two - out)) < 1e-13

    def test_allocation_budget(self):
        # the factorized evolution must never build a 2^n x 2^n matrix
        n = 12
        rng = np.random.default_rng(6)
        coeffs = WalshCoefficients(v=1j * rng.standard_normal(n))
        psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        tracemalloc.start()
        evolve_statevector(coeffs, psi, 1.0)
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        statevector_bytes = 16 * 2**n
        assert peak < 32 * statevector_bytes  # dense operator would need 2^n times more


class TestFeatureState:
    W = SubexpWeight(0.2, 0.5)

    def test_constant_modulus_profile(self):
        enc = QubitEncoding(d=1, q=3)
        psi_a = np.abs(feature_state(enc, self.W, [0.7]))
        psi_b = np.abs(feature_state(enc, self.W, [2.9]))
        assert np.allclose(psi_a, psi_b, atol=1e-13)

    def test_norm_squared_is_lattice_weight_sum(self):
        enc = QubitEncoding(d=1, q=4)
        amps = feature_amplitudes(enc, self.W, [1.1])
        lat = TruncatedLattice(1, 16)
        lam = self.W.lattice_values(lat)
        expected = float(np.sum(lam)) - 1.0  # index 0 is excluded from the encoding
        assert np.vdot(amps, amps).real == pytest.approx(expected, abs=1e-12)

    def test_overlap_peaks_at_matching_point(self):
        enc = QubitEncoding(d=1, q=4)
        x = 2.0
        psi_x = feature_state(enc, self.W, [x])
        grid = np.linspace(0, 2 * math.pi, 128, endpoint=False)
        overlaps = [abs(np.vdot(feature_state(enc, self.W, [y]), psi_x)) for y in grid]
        assert abs(grid[int(np.argmax(overlaps))] - x) < 2 * math.pi / 64


class TestProjectedObservable:
    W = SubexpWeight(0.2, 0.5)

    def test_constant_gives_identity(self):
        enc = QubitEncoding(d=1, q=2)
        s = projected_observable(enc, self.W, FourierObservable.constant(3.0, d=1))
        assert np.array_equal(s, 3.0 * np.eye(enc.dim))

    def test_two_cosine_band_structure(self):
        enc = QubitEncoding(d=1, q=2)
        f = FourierObservable({(1,): 1.0, (-1,): 1.0}, d=1)  # 2 cos(theta)
        s = projected_observable(enc, self.W, f)
        table = enc.index_table()
        for a in range(enc.dim):
            for b in range(enc.dim):
                gap = int(table[a][0] - table[b][0])
                if abs(gap) != 1:
                    assert s[a, b] == 0.0
                else:
                    la = self.W.value(tuple(table[a]))
                    lb = self.W.value(tuple(table[b]))
                    expected = 0.5 * (math.sqrt(lb / la) + math.sqrt(la / lb))
                    assert s[a, b] == pytest.approx(expected, abs=1e-12)

    def test_quadrature_oracle_for_matrix_elements(self):
        # <psi_i, f psi_j> against dense quadrature of conj(psi_i) f psi_j / lambda
        enc = QubitEncoding(d=1, q=2)
        f = FourierObservable({(1,): 1.0, (-1,): 1.0}, d=1)
        table = enc.index_table()
        grid = 512
        theta = np.arange(grid) * 2 * math.pi / grid
        fvals = 2.0 * np.cos(theta)
        raw = np.zeros((enc.dim, enc.dim), dtype=complex)
        for a in range(enc.dim):
            ia = table[a][0]
            la = self.W.value((ia,))
            for b in range(enc.dim):
                jb = table[b][0]
                lb = self.W.value((jb,))
                psi_a = math.sqrt(la) * np.exp(1j * ia * theta)
                fpsi_b = fvals * math.sqrt(lb) * np.exp(1j * jb * theta)
                # basis inner product weights Fourier coefficients by 1/lambda;
                # the product is band-limited so the grid mean is exact
                raw[a, b] = np.mean(np.conj(psi_a) * fpsi_b) / la
        s = projected_observable(enc, self.W, f)
        sym = 0.5 * (raw + raw.conj().T)
        assert np.max(np.abs(s - sym)) < 1e-12

    def test_hermitian_exactly(self):
        enc = QubitEncoding(d=1, q=3)
        s = projected_observable(enc, self.W, COS)
        assert np.array_equal(s, s.conj().T)

    def test_non_real_rejected(self):
        enc = QubitEncoding(d=1, q=2)
        with pytest.raises(ValidationError):
            projected_observable(enc, self.W, FourierObservable({(1,): 1.0}, d=1))


class TestCircuitExpectation:
    W = SubexpWeight(0.2, 0.5)
    SYS = RotationSystem(np.array([math.sqrt(2.0)]))

    def test_constant_exact(self):
        enc = QubitEncoding(d=1, q=3)
        c = FourierObservable.constant(1.75, d=1)
        for t in (0.0, 2.0):
            val = circuit_expectation(enc, self.W, self.SYS, c, [1.0], t)
            assert val == pytest.approx(1.75, abs=1e-13)

    def test_error_decreases_with_resolution(self):
        x, t = 1.0, 0.0
        errors = []
        for q in range(2, 7):
            enc = QubitEncoding(d=1, q=q)
            val = circuit_expectation(enc, self.W, self.SYS, COS, [x], t)
            errors.append(abs(val - math.cos(x)))
        assert all(b < a for a, b in zip(errors, errors[1:]))

    def test_forward_flow_regression(self):
        # the state-evolution sign tracks f(Phi^t x), not f(Phi^-t x)
        enc = QubitEncoding(d=1, q=6)
        x, t = 1.0, 2.0
        val = circuit_expectation(enc, self.W, self.SYS, COS, [x], t)
        forward = koopman_exact(COS, self.SYS, t).evaluate([x]).real
        backward = koopman_exact(COS, self.SYS, -t).evaluate([x]).real
        assert abs(val - forward) < 0.05
        assert abs(val - forward) < abs(val - backward)

    def test_time_invariance_of_error(self):
        enc = QubitEncoding(d=1, q=4)
        x, t = 0.7, 1.9
        val_t = circuit_expectation(enc, self.W, self.SYS, COS, [x], t)
        err_t = abs(val_t - math.cos(x + t * self.SYS.alpha[0]))
        shifted = (x + t * self.SYS.alpha[0]) % (2 * math.pi)
        val_0 = circuit_expectation(enc, self.W, self.SYS, COS, [shifted], 0.0)
        err_0 = abs(val_0 - math.cos(shifted))
        assert abs(err_t - err_0) < 1e-10

    def test_sampling_estimator_converges(self):
        enc = QubitEncoding(d=1, q=3)
        exact = circuit_expectation(enc, self.W, self.SYS, COS, [1.0], 1.0)
        sampled = circuit_expectation(
            enc, self.W, self.SYS, COS, [1.0], 1.0, shots=200_000, seed=11
        )
        assert abs(sampled - exact) < 0.01

    def test_sampling_deterministic_per_seed(self):
        enc = QubitEncoding(d=1, q=2)
        a = circuit_expectation(enc, self.W, self.SYS, COS, [1.0], 1.0, shots=100, seed=5)
        b = circuit_expectation(enc, self.W, self.SYS, COS, [1.0], 1.0, shots=100, seed=5)
        assert a == b


class TestExport:
    def test_line_count_and_zero_angles(self):
        enc = QubitEncoding(d=1, q=2)
        freqs = frequency_vector(enc, RotationSystem(np.array([1.0])))
        coeffs = walsh_coefficients(freqs)
        text = export_circuit(coeffs, enc, 0.0)
        rz_lines = [l for l in text.splitlines() if l.startswith("rz(")]
        assert len(rz_lines) == enc.n_qubits
        assert all(l.startswith("rz(0)") or l.startswith("rz(-0)") for l in rz_lines)

    def test_roundtrip_reproduces_evolution(self):
        enc = QubitEncoding(d=1, q=3)
        sys = RotationSystem(np.array([math.sqrt(2.0)]))
        coeffs = walsh_coefficients(frequency_vector(enc, sys))
        rng = np.random.default_rng(3)
        psi = rng.standard_normal(enc.dim) + 1j * rng.standard_normal(enc.dim)
        psi /= np.linalg.norm(psi)
        t = 1.7
        text = export_circuit(coeffs, enc, t, prep=psi)
        n, d, q, t_back, angles, prep = parse_circuit(text)
        assert (n, d, q) == (enc.n_qubits, 1, 3)
        assert t_back == t
        replayed = simulate_exported(text)
        direct = evolve_statevector(coeffs, psi, t)
        assert np.max(np.abs(replayed - direct)) <= 1e-12
