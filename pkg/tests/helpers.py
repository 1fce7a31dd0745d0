"""Shared constructors for randomized test instances."""

import numpy as np

from resetctrl import (
    CycleGenerator,
    DensityMatrix,
    HilbertSpace,
    Operator,
    bloch_density,
    build_oscillator_qubit,
    constant,
    qubit_qubit_model,
    sin_squared,
    square_pulse,
)

QQ = HilbertSpace((2,))


def random_hermitian(rng, d, scale=1.0):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (m + m.conj().T)


def random_matrix(rng, d, scale=1.0):
    return scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))


def random_density(rng, d):
    m = random_matrix(rng, d)
    m = m @ m.conj().T
    return m / np.trace(m)


def random_pure(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unitary(rng, d):
    q, r = np.linalg.qr(random_matrix(rng, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


_SWITCHINGS = (
    lambda: constant(0.8),
    lambda: sin_squared(1.5),
    lambda: square_pulse(1.2, 0.1, 0.6),
)


def random_switching(rng):
    return _SWITCHINGS[rng.integers(len(_SWITCHINGS))]()


def random_closed_qq(rng, coupling_scale=1.0):
    """Random closed qubit-qubit cycle generator plus an actuator state."""
    gen = CycleGenerator(
        space_S=QQ,
        space_A=QQ,
        h_S=Operator(random_hermitian(rng, 2), QQ),
        h_A=Operator(random_hermitian(rng, 2), QQ),
        h_SA=Operator(random_hermitian(rng, 4, coupling_scale), QQ.tensor(QQ)),
        g=random_switching(rng),
    )
    rho_a = DensityMatrix.from_matrix(random_density(rng, 2))
    return gen, rho_a


def random_open_qq(rng):
    """Random valid open qubit-qubit generator (non-negative switching)."""
    gen = CycleGenerator(
        space_S=QQ,
        space_A=QQ,
        h_S=Operator(random_hermitian(rng, 2), QQ),
        h_A=Operator(random_hermitian(rng, 2), QQ),
        h_SA=Operator(random_hermitian(rng, 4), QQ.tensor(QQ)),
        g=random_switching(rng),
        jumps_S=(Operator(random_matrix(rng, 2, 0.6), QQ),),
        jumps_A=(Operator(random_matrix(rng, 2, 0.6), QQ),),
        jumps_SA=(Operator(random_matrix(rng, 4, 0.3), QQ.tensor(QQ)),),
    )
    rho_a = DensityMatrix.from_matrix(random_density(rng, 2))
    return gen, rho_a


def generic_qq():
    """The two-level scaling-experiment instance: generic actuator state."""
    gen = build_oscillator_qubit(qubit_qubit_model(1.0, 1.0, (1.0, 0.0, 0.0), sin_squared(2.0)))
    rho_a = bloch_density((0.6, 0.0, 0.5))
    return gen, rho_a


def caption_qq():
    """Two-level instance with the illustration's actuator state (I+sx)/2."""
    gen = build_oscillator_qubit(qubit_qubit_model(1.0, 1.0, (1.0, 0.0, 0.0), sin_squared(2.0)))
    rho_a = bloch_density((1.0, 0.0, 0.0))
    return gen, rho_a
