import math

import numpy as np
import pytest

from qkoopman.dynamics import (
    FourierObservable,
    RotationSystem,
    koopman_exact,
    sample_trajectory,
)
from qkoopman.errors import OutOfLatticeError, RankDeficiencyError
from qkoopman.rkha import SubexpWeight, TruncatedLattice
from qkoopman.spectral import (
    analytic_generator,
    data_driven_generator,
    evolve,
    frequency_table,
    smoothing_identity_residual,
)


def random_observable(rng, lat, real=False):
    coeffs = {tuple(j): complex(rng.standard_normal(), rng.standard_normal()) for j in lat.indices}
    if real:
        snap = dict(coeffs)
        for j in list(coeffs):
            coeffs[j] = 0.5 * (snap[j] + snap[tuple(-v for v in j)].conjugate())
    return FourierObservable(coeffs, d=lat.d)


class TestAnalyticGenerator:
    def test_zero_frequency_at_origin(self):
        gen = analytic_generator(RotationSystem(np.array([1.0])), TruncatedLattice(1, 3))
        assert gen.omega_at((0,)) == 0.0

    def test_direct_formula(self):
        sys = RotationSystem(np.array([math.sqrt(2.0), math.sqrt(3.0)]))
        gen = analytic_generator(sys, TruncatedLattice(2, 2))
        assert gen.omega_at((1, -1)) == pytest.approx(math.sqrt(2.0) - math.sqrt(3.0))

    def test_spectrum_symmetry(self):
        sys = RotationSystem(np.array([math.sqrt(2.0), math.sqrt(3.0)]))
        lat = TruncatedLattice(2, 3)
        gen = analytic_generator(sys, lat)
        for j in lat.indices:
            assert gen.omega_at(tuple(j)) == pytest.approx(-gen.omega_at(tuple(-j)))

    def test_eigenvalues_imaginary(self):
        gen = analytic_generator(RotationSystem(np.array([math.sqrt(2.0)])), TruncatedLattice(1, 8))
        eigs = np.linalg.eigvals(gen.matrix)
        assert np.max(np.abs(eigs.real)) <= 1e-10


class TestEvolve:
    def test_identity_at_t0(self):
        rng = np.random.default_rng(0)
        lat = TruncatedLattice(1, 4)
        gen = analytic_generator(RotationSystem(np.array([1.3])), lat)
        f = random_observable(rng, lat)
        g = evolve(gen, f, 0.0)
        for j, c in f.coeffs.items():
            assert g.coeffs[j] == pytest.approx(c)

    def test_matches_exact_koopman(self):
        rng = np.random.default_rng(1)
        sys = RotationSystem(np.array([math.sqrt(2.0)]))
        lat = TruncatedLattice(1, 5)
        gen = analytic_generator(sys, lat)
        f = random_observable(rng, lat)
        for t in (0.2, 1.0, -3.7):
            via_gen = evolve(gen, f, t)
            via_exact = koopman_exact(f, sys, t)
            for j in f.coeffs:
                assert abs(via_gen.coeffs[j] - via_exact.coeffs[j]) < 1e-14

    def test_norm_preserved(self):
        rng = np.random.default_rng(2)
        lat = TruncatedLattice(1, 6)
        gen = analytic_generator(RotationSystem(np.array([math.sqrt(5.0)])), lat)
        f = random_observable(rng, lat)
        assert evolve(gen, f, 7.7).l2_norm() == pytest.approx(f.l2_norm(), abs=1e-12)

    def test_out_of_lattice_rejected(self):
        gen = analytic_generator(RotationSystem(np.array([1.0])), TruncatedLattice(1, 2))
        f = FourierObservable({(3,): 1.0}, d=1)
        with pytest.raises(OutOfLatticeError):
            evolve(gen, f, 1.0)

    def test_group_law_both_kinds(self):
        rng = np.random.default_rng(3)
        sys = RotationSystem(np.array([1.0]))
        lat = TruncatedLattice(1, 3)
        gens = [
            analytic_generator(sys, lat),
            data_driven_generator(sample_trajectory(sys, [0.1], 0.01, 3000), 0.01, lat),
        ]
        f = random_observable(rng, lat)
        for gen in gens:
            s, t = 0.7, 2.1
            lhs = evolve(gen, evolve(gen, f, s), t)
            rhs = evolve(gen, f, s + t)
            for j in f.coeffs:
                assert abs(lhs.coeffs[j] - rhs.coeffs[j]) < 1e-11

    def test_reality_commutes_with_conjugation(self):
        rng = np.random.default_rng(4)
        lat = TruncatedLattice(1, 4)
        sys = RotationSystem(np.array([math.sqrt(2.0)]))
        gen = analytic_generator(sys, lat)
        f = random_observable(rng, lat, real=True)
        t = 1.9
        evolved = evolve(gen, f, t)
        evolved_conj = evolve(gen, f.conjugate(), t)
        for j, c in evolved.coeffs.items():
            mirror = evolved_conj.coeffs[tuple(-v for v in j)]
            assert abs(mirror - c.conjugate()) < 1e-12


class TestSmoothingIdentity:
    def test_semigroup_at_t0(self):
        rng = np.random.default_rng(5)
        lat = TruncatedLattice(1, 6)
        gen = analytic_generator(RotationSystem(np.array([1.0])), lat)
        w = SubexpWeight(1.0, 0.5)
        f = random_observable(rng, lat)
        assert smoothing_identity_residual(w, gen, f, 0.0) <= 1e-13

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_analytic_diagonal_paths_agree(self, t):
        rng = np.random.default_rng(6)
        lat = TruncatedLattice(1, 8)
        gen = analytic_generator(RotationSystem(np.array([math.sqrt(2.0)])), lat)
        w = SubexpWeight(0.7, 0.5)
        f = random_observable(rng, lat)
        assert smoothing_identity_residual(w, gen, f, t) <= 1e-12

    def test_constant_observable(self):
        lat = TruncatedLattice(1, 4)
        gen = analytic_generator(RotationSystem(np.array([1.0])), lat)
        w = SubexpWeight(1.0, 0.5)
        f = FourierObservable.constant(2.0, d=1)
        assert smoothing_identity_residual(w, gen, f, 3.3) == 0.0


class TestDataDrivenGenerator:
    def setup_method(self):
        self.sys = RotationSystem(np.array([1.0]))
        self.lat = TruncatedLattice(1, 3)
        traj = sample_trajectory(self.sys, [0.2], 0.01, 5000)
        self.gen = data_driven_generator(traj, 0.01, self.lat)

    def test_recovers_base_frequency(self):
        # sorted order: 0 first, then the +/- pair of the base frequency
        assert abs(self.gen.eigen_omega[0]) <= 1e-10
        assert abs(self.gen.eigen_omega[1] - 1.0) <= 1e-3
        assert abs(self.gen.eigen_omega[2] + 1.0) <= 1e-3

    def test_antisymmetry_exact(self):
        a = self.gen.matrix
        assert np.array_equal(a + a.conj().T, np.zeros_like(a))

    def test_constant_is_exact_null_vector(self):
        e0 = np.zeros(self.lat.size)
        e0[self.lat.position((0,))] = 1.0
        assert np.array_equal(self.gen.matrix @ e0, np.zeros(self.lat.size, dtype=complex))

    def test_conjugate_pairing(self):
        om = self.gen.eigen_omega
        for k in range(1, om.size - 1, 2):
            assert om[k] == pytest.approx(-om[k + 1], abs=1e-10)

    def test_eigenvalues_purely_imaginary(self):
        eigs = np.linalg.eigvals(self.gen.matrix)
        assert np.max(np.abs(eigs.real)) <= 1e-10

    def test_rank_deficiency_error(self):
        traj = sample_trajectory(self.sys, [0.0], 0.01, 6)
        with pytest.raises(RankDeficiencyError) as err:
            data_driven_generator(traj, 0.01, TruncatedLattice(1, 3))
        assert err.value.deficiency == 3

    def test_frequency_table(self):
        ref = analytic_generator(self.sys, self.lat)
        rows = frequency_table(self.gen, ref)
        assert len(rows) == self.lat.size
        assert max(r[2] for r in rows) <= 1e-3
