"""Independent checks: partial transpose, grid search, reassembly residual."""

from __future__ import annotations

import numpy as np
import pytest

from entquasi import (
    DimensionMismatch,
    Dims,
    HermitianOperator,
    ProductState,
    Ket,
    QuasiDistribution,
    UnsupportedDims,
    grid_sep_eigen,
    partial_transpose,
    ppt_check,
    reconstruct_quasi,
    solve_sep_eigen,
    validate_density,
    verify_decomposition,
)

from conftest import (
    DIMS22,
    basis_product_mixture,
    bell_matrix,
    bell_state,
    random_density,
    random_hermitian,
    random_product_state,
    rhat_operator,
    sigma_a_matrix,
    sigma_a_state,
)


def _werner(p: float) -> np.ndarray:
    return p * bell_matrix() + (1.0 - p) * np.eye(4) / 4.0


# ---------------------------------------------------------------------------
# Partial transpose
# ---------------------------------------------------------------------------


def test_bell_is_npt():
    report = ppt_check(bell_state())
    assert report.is_npt
    assert report.decisive
    assert abs(report.min_pt_eigenvalue + 0.5) < 1e-12


def test_product_state_is_ppt():
    m = np.zeros((4, 4))
    m[0, 0] = 1.0
    report = ppt_check(validate_density(m, DIMS22))
    assert not report.is_npt
    assert report.min_pt_eigenvalue > -1e-12


def test_smooth_mixture_is_ppt():
    report = ppt_check(sigma_a_state())
    assert not report.is_npt


def test_werner_threshold():
    sep = ppt_check(validate_density(_werner(0.3), DIMS22))
    ent = ppt_check(validate_density(_werner(0.6), DIMS22))
    assert not sep.is_npt
    assert ent.is_npt
    assert abs(ent.min_pt_eigenvalue - (1.0 - 3.0 * 0.6) / 4.0) < 1e-12


@pytest.mark.parametrize("dims, expected", [(Dims(2, 2), True), (Dims(2, 3), True), (Dims(3, 3), False)])
def test_decisive_dimensions(dims, expected):
    rng = np.random.default_rng(1)
    assert ppt_check(random_density(dims, rng)).decisive is expected


@pytest.mark.parametrize("dims", [Dims(2, 2), Dims(2, 3), Dims(3, 2)])
def test_partial_transpose_is_involutive_and_trace_preserving(dims):
    rng = np.random.default_rng(9)
    m = random_hermitian(dims, rng).matrix
    pt = partial_transpose(m, dims)
    assert np.max(np.abs(partial_transpose(pt, dims) - m)) < 1e-14
    assert abs(np.trace(pt) - np.trace(m)) < 1e-10
    assert np.max(np.abs(pt - pt.conj().T)) < 1e-12


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


def test_grid_finds_smooth_mixture_values(light_cfg):
    op = HermitianOperator(DIMS22, sigma_a_matrix())
    sols = grid_sep_eigen(op, resolution=32, cfg=light_cfg)
    gs = sols.g_values()
    for target in (0.625, 0.125):
        assert np.min(np.abs(gs - target)) < 1e-4
    assert np.max(gs) < 0.625 + 1e-6


def test_grid_finds_cross_term_branches(light_cfg):
    sols = grid_sep_eigen(rhat_operator(), resolution=32, cfg=light_cfg)
    gs = sols.g_values()
    assert np.min(np.abs(gs - 0.25)) < 1e-6
    assert np.min(np.abs(gs + 0.25)) < 1e-6


def test_grid_matches_solver_on_product_projector(light_cfg):
    ps = random_product_state(DIMS22, np.random.default_rng(3))
    op = HermitianOperator(DIMS22, ps.projector())
    sols = grid_sep_eigen(op, resolution=32, cfg=light_cfg)
    top = max(sols.solutions, key=lambda s: s.g)
    assert abs(top.g - 1.0) < 1e-8
    assert top.state.fidelity(ps) > 1.0 - 1e-6


@pytest.mark.parametrize("seed", [0, 1])
def test_grid_and_solver_agree_on_random_operators(seed, light_cfg):
    rng = np.random.default_rng(seed)
    op = random_hermitian(DIMS22, rng)
    grid_gs = grid_sep_eigen(op, resolution=32, cfg=light_cfg).g_values()
    solver_gs = solve_sep_eigen(op, light_cfg).g_values()
    for g in grid_gs:
        assert np.min(np.abs(solver_gs - g)) < 1e-4


def test_grid_rejects_unsupported_inputs(light_cfg):
    with pytest.raises(UnsupportedDims):
        grid_sep_eigen(random_hermitian(Dims(2, 3), np.random.default_rng(0)))
    with pytest.raises(ValueError):
        grid_sep_eigen(
            HermitianOperator(DIMS22, np.eye(4)), resolution=16, cfg=light_cfg
        )


# ---------------------------------------------------------------------------
# Decomposition verification
# ---------------------------------------------------------------------------


def test_verify_accepts_exact_reconstruction():
    rho = bell_state()
    assert verify_decomposition(rho, reconstruct_quasi(rho)) < 1e-12


def test_verify_residual_tracks_perturbation_size():
    rho = bell_state()
    dist = reconstruct_quasi(rho)
    terms = list(dist)
    w0, s0 = terms[0]
    bent = QuasiDistribution(dist.dims, tuple([(w0 + 1e-3, s0)] + terms[1:]))
    residual = verify_decomposition(rho, bent)
    assert 1e-4 < residual < 1e-2


def test_verify_rejects_mismatched_dims():
    rho = bell_state()
    other = random_product_state(Dims(2, 3), np.random.default_rng(2))
    dist = QuasiDistribution(Dims(2, 3), ((1.0, other),))
    with pytest.raises(DimensionMismatch):
        verify_decomposition(rho, dist)


def test_nonnegative_decompositions_are_ppt():
    """Any state with an exact nonnegative product decomposition must pass
    the partial transpose check."""
    rng = np.random.default_rng(31)
    for n_terms in (1, 2, 4):
        rho, terms = basis_product_mixture(n_terms, rng)
        dist = QuasiDistribution(DIMS22, tuple(terms), density=True)
        assert verify_decomposition(rho, dist) < 1e-9
        assert dist.min_weight >= 0.0
        assert not ppt_check(rho).is_npt
