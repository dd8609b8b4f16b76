"""Quantum-mechanical representations of classical measure-preserving dynamics.

The package is organized around finite, exactly checkable models:

- ``dynamics``: torus rotations, finite periodic orbits, band-limited
  observables, von Mises densities, and the exact Koopman evolution used as
  the ground-truth oracle throughout.
- ``rkha``: subexponential weight families on the integer lattice, truncated
  Mercer kernels, reproducing-kernel Hilbert algebra bases, comultiplication
  coefficients, and the diagonal smoothing semigroup.
- ``spectral``: regularized skew-adjoint generators on the truncated basis
  (analytic for rotations, data-driven from trajectories), unitary evolution,
  and the smoothing/evolution conjugation identity.
- ``qmda``: classical Bayesian filtering next to its density-operator
  formulation, with effects, the operator Bayes rule, and positivity
  preserving finite-rank compression.
- ``fock``: the truncated weighted symmetric Fock space over generator
  eigenmodes, lifted evolution, phase-torus points of the algebra spectrum,
  and the two forecast schemes built on top of them.
- ``qcirc``: the simulated quantum-circuit algorithm for pure-point-spectrum
  rotations, with index encodings, Walsh phase coefficients, factorized
  statevector evolution, and circuit export.
- ``cli``: the experiment harness exposed as ``qkoopman`` subcommands.
"""

__version__ = "0.1.0"
