"""Cycle Liouvillian decomposition and the effective objects derived from it.

A reset cycle evolves the system-actuator pair under

    L(zeta) = L_S + L_A + g(zeta) L_SA,   zeta = tau / dt in [0, 1],

with each part time-independent and of Lindblad type. From this
decomposition the module builds the mean coupling, the effective
Hamiltonian, and the first- and second-order coefficients of the
short-cycle expansion of the reduced dynamical map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import quadrature
from .qcore import (
    TOL_HERM,
    DensityMatrix,
    HilbertSpace,
    Operator,
    SuperOperator,
    ham_super,
    liouvillian_super,
    partial_trace_matrix,
    vec,
)

_GMAX_SAMPLES = 10 ** 4


@dataclass(frozen=True)
class SwitchingFunction:
    """Piecewise-continuous coupling modulation g on [0, 1].

    ``breakpoints`` are interior discontinuity (or kink) locations used
    to split quadrature. ``g_max`` is the supremum of |g|; when not
    supplied it is estimated by dense sampling. The mean is computed by
    adaptive quadrature at construction and cached.
    """

    evaluate: Callable[[float], float]
    breakpoints: tuple[float, ...] = ()
    g_max: float | None = None
    mean: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(p) for p in self.breakpoints))
        if self.g_max is None:
            zs = np.linspace(0.0, 1.0, _GMAX_SAMPLES)
            zs = np.union1d(zs, [p for p in self.breakpoints if 0.0 <= p <= 1.0])
            object.__setattr__(
                self, "g_max", float(max(abs(self.evaluate(z)) for z in zs))
            )
        object.__setattr__(self, "mean", mean_coupling(self))

    def __call__(self, zeta: float) -> float:
        return float(self.evaluate(zeta))


def mean_coupling(g: SwitchingFunction) -> float:
    """Average of g over one cycle, by adaptive quadrature."""
    return quadrature.integrate_scalar(
        g.evaluate, 0.0, 1.0, breakpoints=g.breakpoints, tol=1e-10
    )


def constant(value: float) -> SwitchingFunction:
    return SwitchingFunction(lambda z, v=float(value): v, g_max=abs(float(value)))


def sin_squared(peak: float) -> SwitchingFunction:
    """g(zeta) = peak * sin^2(pi zeta); the pulse used in the example model."""
    return SwitchingFunction(
        lambda z, p=float(peak): p * np.sin(np.pi * z) ** 2, g_max=abs(float(peak))
    )


def square_pulse(height: float, start: float = 0.0, stop: float = 0.5) -> SwitchingFunction:
    if not 0.0 <= start < stop <= 1.0:
        raise ValueError(f"need 0 <= start < stop <= 1, got [{start}, {stop}]")

    def evaluate(z, h=float(height), a=float(start), b=float(stop)):
        return h if a <= z <= b else 0.0

    return SwitchingFunction(evaluate, breakpoints=(start, stop), g_max=abs(float(height)))


def from_table(zs: Sequence[float], values: Sequence[float]) -> SwitchingFunction:
    """Linear interpolation through sampled (zeta, g) points."""
    zs = np.asarray(zs, dtype=float)
    values = np.asarray(values, dtype=float)
    if zs.ndim != 1 or zs.shape != values.shape or zs.size < 2:
        raise ValueError("table needs matching 1-d arrays with >= 2 points")
    if zs[0] > 0.0 or zs[-1] < 1.0 or np.any(np.diff(zs) <= 0):
        raise ValueError("table abscissae must increase and cover [0, 1]")
    return SwitchingFunction(
        lambda z: float(np.interp(z, zs, values)),
        breakpoints=tuple(float(z) for z in zs[1:-1]),
        g_max=float(np.max(np.abs(values))),
    )


def _check_hermitian(name: str, op: Operator, tol: float):
    if not op.is_hermitian(tol):
        raise ValueError(f"{name} must be Hermitian within {tol:.1e}")


@dataclass(frozen=True)
class CycleGenerator:
    """Liouvillian decomposition of one evolve-and-reset cycle.

    Hamiltonian parts h_S, h_A (free) and h_SA (coupling, modulated by
    g), plus optional jump-operator lists attached to each part. Empty
    jump lists give closed (unitary) intra-cycle dynamics.
    """

    space_S: HilbertSpace
    space_A: HilbertSpace
    h_S: Operator
    h_A: Operator
    h_SA: Operator
    g: SwitchingFunction
    jumps_S: tuple[Operator, ...] = ()
    jumps_A: tuple[Operator, ...] = ()
    jumps_SA: tuple[Operator, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "jumps_S", tuple(self.jumps_S))
        object.__setattr__(self, "jumps_A", tuple(self.jumps_A))
        object.__setattr__(self, "jumps_SA", tuple(self.jumps_SA))
        d_s, d_a = self.space_S.total_dim, self.space_A.total_dim
        for name, op, dim in (
            ("h_S", self.h_S, d_s),
            ("h_A", self.h_A, d_a),
            ("h_SA", self.h_SA, d_s * d_a),
        ):
            if op.dim != dim:
                raise ValueError(f"{name} has dimension {op.dim}, expected {dim}")
            _check_hermitian(name, op, TOL_HERM)
        for name, jumps, dim in (
            ("jumps_S", self.jumps_S, d_s),
            ("jumps_A", self.jumps_A, d_a),
            ("jumps_SA", self.jumps_SA, d_s * d_a),
        ):
            for k, op in enumerate(jumps):
                if op.dim != dim:
                    raise ValueError(f"{name}[{k}] has dimension {op.dim}, expected {dim}")

    @property
    def space(self) -> HilbertSpace:
        return self.space_S.tensor(self.space_A)

    @property
    def total_dim(self) -> int:
        return self.space_S.total_dim * self.space_A.total_dim

    @property
    def is_closed(self) -> bool:
        return not (self.jumps_S or self.jumps_A or self.jumps_SA)

    # --- full-space embeddings, cached because the generator is immutable ---

    @cached_property
    def h_free_full(self) -> np.ndarray:
        """H_S kron I + I kron H_A on the joint space."""
        d_s, d_a = self.space_S.total_dim, self.space_A.total_dim
        return np.kron(self.h_S.matrix, np.eye(d_a)) + np.kron(np.eye(d_s), self.h_A.matrix)

    @cached_property
    def jumps_free_full(self) -> tuple[np.ndarray, ...]:
        d_s, d_a = self.space_S.total_dim, self.space_A.total_dim
        embedded = [np.kron(l.matrix, np.eye(d_a)) for l in self.jumps_S]
        embedded += [np.kron(np.eye(d_s), l.matrix) for l in self.jumps_A]
        return tuple(embedded)

    @cached_property
    def jumps_coupling_full(self) -> tuple[np.ndarray, ...]:
        return tuple(l.matrix for l in self.jumps_SA)

    def hamiltonian_at(self, zeta: float) -> np.ndarray:
        return self.h_free_full + self.g(zeta) * self.h_SA.matrix

    def apply_free_liouvillian(self, m: np.ndarray) -> np.ndarray:
        """(L_S + L_A) applied to a joint-space matrix."""
        return _apply_lindblad(self.h_free_full, self.jumps_free_full, m)

    def apply_coupling_liouvillian(self, m: np.ndarray) -> np.ndarray:
        """L_SA applied to a joint-space matrix (without the g factor)."""
        return _apply_lindblad(self.h_SA.matrix, self.jumps_coupling_full, m)

    def liouvillian_at(self, zeta: float, m: np.ndarray) -> np.ndarray:
        return self.apply_free_liouvillian(m) + self.g(zeta) * self.apply_coupling_liouvillian(m)

    @cached_property
    def free_super(self) -> SuperOperator:
        """Matrix form of L_S + L_A on the joint space (small dimensions)."""
        h = Operator(self.h_free_full, self.space)
        jumps = tuple(Operator(l, self.space) for l in self.jumps_free_full)
        return liouvillian_super(h, jumps)

    @cached_property
    def coupling_super(self) -> SuperOperator:
        """Matrix form of L_SA on the joint space (small dimensions)."""
        return liouvillian_super(self.h_SA, self.jumps_SA)

    def validity_report(self) -> list[str]:
        """Warnings about physically questionable configurations."""
        warnings = []
        if self.jumps_SA:
            zs = np.linspace(0.0, 1.0, 1001)
            if min(self.g(z) for z in zs) < 0:
                warnings.append(
                    "switching function attains negative values while coupling "
                    "dissipators are present: the instantaneous generator is "
                    "not of Lindblad form for those times"
                )
        return warnings


def _apply_lindblad(h: np.ndarray, jumps: Sequence[np.ndarray], m: np.ndarray) -> np.ndarray:
    out = -1j * (h @ m - m @ h)
    for l in jumps:
        lm = l @ m
        ll = l.conj().T @ l
        out = out + lm @ l.conj().T - 0.5 * (ll @ m + m @ ll)
    return out


def _basis_matrix(index: int, dim: int) -> np.ndarray:
    # column-stacking order: index = row + col * dim
    e = np.zeros((dim, dim), dtype=complex)
    e[index % dim, index // dim] = 1.0
    return e


def _reduced_super(gen: CycleGenerator, rho_A: DensityMatrix,
                   apply_full: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Matrix of rho_S -> tr_A[ F(rho_S kron rho_A) ] for a linear map F."""
    d_s = gen.space_S.total_dim
    d_a = gen.space_A.total_dim
    cols = np.empty((d_s * d_s, d_s * d_s), dtype=complex)
    for idx in range(d_s * d_s):
        joint = np.kron(_basis_matrix(idx, d_s), rho_A.matrix)
        reduced = partial_trace_matrix(apply_full(joint), (d_s, d_a), keep=0)
        cols[:, idx] = vec(reduced)
    return cols


def _check_actuator_state(gen: CycleGenerator, rho_A: DensityMatrix):
    if rho_A.space.total_dim != gen.space_A.total_dim:
        raise ValueError(
            f"actuator state dimension {rho_A.space.total_dim} != "
            f"{gen.space_A.total_dim}"
        )


def effective_hamiltonian(gen: CycleGenerator, rho_A: DensityMatrix) -> Operator:
    """H_S plus the mean coupling times the actuator-averaged interaction.

    In the high reset-frequency limit the reduced system dynamics is
    generated by this Hamiltonian (for closed intra-cycle dynamics).
    """
    _check_actuator_state(gen, rho_A)
    d_s = gen.space_S.total_dim
    d_a = gen.space_A.total_dim
    averaged = partial_trace_matrix(
        gen.h_SA.matrix @ np.kron(np.eye(d_s), rho_A.matrix), (d_s, d_a), keep=0
    )
    return Operator(gen.h_S.matrix + gen.g.mean * averaged, gen.space_S)


def phi1_super(gen: CycleGenerator, rho_A: DensityMatrix) -> SuperOperator:
    """First-order coefficient of the short-cycle expansion of the cycle map.

    Phi_1 = L_S + g_mean * tr_A[ L_SA ( . kron rho_A) ]; the actuator's
    free generator drops out of this order entirely. For closed dynamics
    this reduces to the commutator superoperator of the effective
    Hamiltonian.
    """
    _check_actuator_state(gen, rho_A)
    if gen.jumps_S:
        system_part = liouvillian_super(gen.h_S, gen.jumps_S).matrix
    else:
        system_part = ham_super(gen.h_S).matrix
    coupling_part = _reduced_super(gen, rho_A, gen.apply_coupling_liouvillian)
    return SuperOperator(system_part + gen.g.mean * coupling_part, gen.space_S)


def _phi2_weights(g: SwitchingFunction) -> tuple[float, float, float, float]:
    """Scalar weights of the time-ordered double integral of L(z1) L(z2).

    Expanding L(z) = L0 + g(z) L1 over the triangle z1 >= z2 gives
    weights for the four operator orderings L0L0, L1L0, L0L1, L1L1.
    """
    bp = g.breakpoints
    w_00 = 0.5
    w_10 = quadrature.integrate_scalar(lambda z: g(z) * z, breakpoints=bp)
    w_01 = quadrature.integrate_scalar(lambda z: g(z) * (1.0 - z), breakpoints=bp)

    def inner(z1: float) -> float:
        if z1 <= 0.0:
            return 0.0
        return quadrature.integrate_scalar(g.evaluate, 0.0, z1, breakpoints=bp)

    w_11 = quadrature.integrate_scalar(lambda z: g(z) * inner(z), breakpoints=bp)
    return w_00, w_10, w_01, w_11


def phi2_super(gen: CycleGenerator, rho_A: DensityMatrix) -> SuperOperator:
    """Second-order coefficient of the short-cycle expansion.

    The time-ordered double integral is exact in the operator structure;
    only four scalar switching-function moments are computed by
    quadrature.
    """
    _check_actuator_state(gen, rho_A)
    w_00, w_10, w_01, w_11 = _phi2_weights(gen.g)
    l0 = gen.apply_free_liouvillian
    l1 = gen.apply_coupling_liouvillian

    def apply_full(m: np.ndarray) -> np.ndarray:
        l0m = l0(m)
        l1m = l1(m)
        return w_00 * l0(l0m) + w_10 * l1(l0m) + w_01 * l0(l1m) + w_11 * l1(l1m)

    return SuperOperator(_reduced_super(gen, rho_A, apply_full), gen.space_S)
