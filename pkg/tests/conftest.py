"""Shared builders for states, operators, and solver configurations.

Everything random is driven by explicit numpy Generators so each test remains
reproducible in isolation.
"""

from __future__ import annotations

import numpy as np
import pytest

from entquasi import (
    DensityOperator,
    Dims,
    HermitianOperator,
    Ket,
    ProductState,
    SolverConfig,
    validate_density,
)

DIMS22 = Dims(2, 2)


def sket(n: int) -> np.ndarray:
    """(|0> + i^n |1>)/sqrt(2) — the four equatorial qubit states."""
    return np.array([1.0, 1j**n], dtype=complex) / np.sqrt(2.0)


def sprod(m: int, n: int) -> ProductState:
    return ProductState(Ket(sket(m)), Ket(sket(n)))


def bell_matrix() -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    for i in (0, 3):
        for j in (0, 3):
            m[i, j] = 0.5
    return m


def bell_state() -> DensityOperator:
    return validate_density(bell_matrix(), DIMS22)


def sigma_a_matrix() -> np.ndarray:
    """Uniform background plus a pure product component on the equator."""
    v = np.kron(sket(0), sket(0))
    return np.eye(4) / 8.0 + 0.5 * np.outer(v, v.conj())


def sigma_a_state() -> DensityOperator:
    return validate_density(sigma_a_matrix(), DIMS22)


def rhat_matrix() -> np.ndarray:
    """The interference remainder of the Bell state: off-diagonal halves."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 3] = m[3, 0] = 0.5
    return m


def rhat_operator() -> HermitianOperator:
    return HermitianOperator(DIMS22, rhat_matrix())


def haar_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(dims: Dims, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Wishart-style random mixed state of the given (optional) rank."""
    n = dims.total
    k = rank or n
    z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    m = z @ z.conj().T
    return validate_density(m / np.trace(m).real, dims)


def random_hermitian(dims: Dims, rng: np.random.Generator) -> HermitianOperator:
    n = dims.total
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianOperator(dims, (z + z.conj().T) / 2.0)


def random_product_state(dims: Dims, rng: np.random.Generator) -> ProductState:
    return ProductState(Ket(haar_ket(dims.d_a, rng)), Ket(haar_ket(dims.d_b, rng)))


def basis_product_mixture(
    n_terms: int, rng: np.random.Generator
) -> tuple[DensityOperator, list[tuple[float, ProductState]]]:
    """Mixture of up to four pure products drawn from one product basis.

    Two local unitaries fix an orthogonal product basis; the mixture takes
    ``n_terms`` of its four members with random weights.  The components are
    mutually orthogonal, so each one is itself a fixed point of the
    alternating collapse maps.
    """
    u = haar_unitary(2, rng)
    v = haar_unitary(2, rng)
    pairs = [(i, j) for i in range(2) for j in range(2)]
    picks = rng.choice(4, size=n_terms, replace=False)
    weights = rng.dirichlet(np.ones(n_terms))
    m = np.zeros((4, 4), dtype=complex)
    terms = []
    for w, t in zip(weights, picks):
        i, j = pairs[t]
        state = ProductState(Ket(u[:, i]), Ket(v[:, j]))
        vec = state.joint()
        m += w * np.outer(vec, vec.conj())
        terms.append((float(w), state))
    return validate_density(m, DIMS22), terms


def phase_ket(phi: float) -> Ket:
    """(|0> + e^{i phi} |1>)/sqrt(2)."""
    return Ket.normalized(np.array([1.0, np.exp(1j * phi)]))


def cross_term_pairs() -> list[tuple[float, ProductState]]:
    """Eight (g, state) solutions of the pure cross-term operator, sampled at
    quarter-turn phases: the g = +1/4 branch pairs each equatorial ket with
    its conjugate, the g = -1/4 branch with the antipode of its conjugate."""
    phis = [0.0, np.pi / 2.0, np.pi, 3.0 * np.pi / 2.0]
    plus = [(0.25, ProductState(phase_ket(p), phase_ket(-p))) for p in phis]
    minus = [(-0.25, ProductState(phase_ket(p), phase_ket(np.pi - p))) for p in phis]
    return plus + minus


def cross_term_gram() -> np.ndarray:
    """Overlap matrix of the eight quarter-turn cross-term solutions."""
    return (
        np.array(
            [
                [4, 1, 0, 1, 0, 1, 0, 1],
                [1, 4, 1, 0, 1, 0, 1, 0],
                [0, 1, 4, 1, 0, 1, 0, 1],
                [1, 0, 1, 4, 1, 0, 1, 0],
                [0, 1, 0, 1, 4, 1, 0, 1],
                [1, 0, 1, 0, 1, 4, 1, 0],
                [0, 1, 0, 1, 0, 1, 4, 1],
                [1, 0, 1, 0, 1, 0, 1, 4],
            ],
            dtype=float,
        )
        / 4.0
    )


def generic_product_mixture(n_terms: int, rng: np.random.Generator) -> DensityOperator:
    """Mixture of independent Haar-random (generally non-orthogonal) products."""
    m = np.zeros((4, 4), dtype=complex)
    for w in rng.dirichlet(np.ones(n_terms)):
        vec = random_product_state(DIMS22, rng).joint()
        m += w * np.outer(vec, vec.conj())
    return validate_density(m, DIMS22)


@pytest.fixture
def light_cfg() -> SolverConfig:
    """Small restart budget for states with simple solution structure."""
    return SolverConfig(restarts=24, saturation_window=8, rng_seed=99)


@pytest.fixture
def std_cfg() -> SolverConfig:
    """Moderate budget used by the worked-example tests."""
    return SolverConfig(restarts=96, rng_seed=1729)
