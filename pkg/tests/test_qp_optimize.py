"""Weight systems, norm-minimal solutions, and the analysis pipeline."""

from __future__ import annotations

import numpy as np
import pytest

from entquasi import (
    HermitianOperator,
    InconsistentSystem,
    Ket,
    NotOrthogonalSelection,
    ProductState,
    SolutionSet,
    analyze,
    assemble,
    build_gram_system,
    optimize_weights,
    orthogonal_subset,
    residual_split,
    solve_quasi,
    solve_sep_eigen,
    validate_density,
    weights_to_distribution,
)

from conftest import (
    DIMS22,
    basis_product_mixture,
    bell_matrix,
    bell_state,
    cross_term_gram,
    cross_term_pairs,
    generic_product_mixture,
    haar_unitary,
    rhat_matrix,
    sigma_a_matrix,
    sigma_a_state,
    sprod,
)


def _orthogonal_pairs(rng, gs):
    """(g, state) pairs over a random orthogonal product basis."""
    u = haar_unitary(2, rng)
    v = haar_unitary(2, rng)
    states = [
        ProductState(Ket(u[:, i]), Ket(v[:, j])) for i in range(2) for j in range(2)
    ]
    return list(zip(gs, states[: len(gs)]))


# ---------------------------------------------------------------------------
# System assembly and solving
# ---------------------------------------------------------------------------


def test_smooth_mixture_system_is_identity(std_cfg):
    op = HermitianOperator(DIMS22, sigma_a_matrix())
    system = build_gram_system(solve_sep_eigen(op, std_cfg))
    assert np.max(np.abs(system.gram - np.eye(4))) < 1e-10
    solved = solve_quasi(system)
    assert np.allclose(solved.p_particular, system.g_vec, atol=1e-10)
    assert sorted(np.round(system.g_vec, 10)) == [0.125, 0.125, 0.125, 0.625]


def test_cross_term_system_matches_closed_form():
    system = build_gram_system(cross_term_pairs())
    assert np.max(np.abs(system.gram - cross_term_gram())) < 1e-12
    vals = np.linalg.eigvalsh(system.gram)
    assert np.allclose(sorted(vals), [0.0, 1, 1, 1, 1, 1, 1, 2.0], atol=1e-9)
    solved = solve_quasi(system)
    assert solved.kernel.shape == (8, 1)
    alternating = np.array([1, -1, 1, -1, 1, -1, 1, -1]) / np.sqrt(8.0)
    assert min(
        np.max(np.abs(solved.kernel[:, 0] - alternating)),
        np.max(np.abs(solved.kernel[:, 0] + alternating)),
    ) < 1e-10


def test_cross_term_optimal_weights():
    solved = solve_quasi(build_gram_system(cross_term_pairs()))
    best = optimize_weights(solved)
    target = np.array([1, 1, 1, 1, -1, -1, -1, -1]) / 4.0
    assert np.max(np.abs(best.p_opt - target)) < 1e-8


def test_optimum_is_reachable_from_any_particular_solution():
    solved = solve_quasi(build_gram_system(cross_term_pairs()))
    handpicked = np.array([1, 0, 1, 0, 0, -1, 0, -1]) / 2.0
    best = optimize_weights(solved, handpicked)
    target = np.array([1, 1, 1, 1, -1, -1, -1, -1]) / 4.0
    assert np.max(np.abs(best.p_opt - target)) < 1e-10


def test_duplicate_states_collapse_to_rank_one():
    pair = (0.3, sprod(0, 0))
    system = solve_quasi(build_gram_system([pair, pair]))
    assert np.allclose(system.gram, np.ones((2, 2)))
    assert system.kernel.shape == (2, 1)
    best = optimize_weights(system)
    assert np.allclose(best.p_opt, [0.15, 0.15], atol=1e-12)


def test_orthogonal_states_pass_g_through():
    rng = np.random.default_rng(6)
    gs = [0.4, -0.1, 0.25]
    system = solve_quasi(build_gram_system(_orthogonal_pairs(rng, gs)))
    assert np.max(np.abs(system.gram - np.eye(3))) < 1e-12
    best = optimize_weights(system)
    assert np.allclose(best.p_opt, gs, atol=1e-10)


def test_optimize_requires_solved_system():
    system = build_gram_system(cross_term_pairs())
    with pytest.raises(ValueError):
        optimize_weights(system)


def test_optimize_rejects_non_solutions():
    solved = solve_quasi(build_gram_system(cross_term_pairs()))
    with pytest.raises(InconsistentSystem):
        optimize_weights(solved, np.ones(8))
    with pytest.raises(ValueError):
        optimize_weights(solved, np.ones(5))


def test_conflicting_values_raise_inconsistent():
    state = sprod(0, 0)
    with pytest.raises(InconsistentSystem) as err:
        solve_quasi(build_gram_system([(1.0, state), (0.0, state)]))
    assert err.value.residual > 0.1
    assert err.value.system is not None
    assert err.value.system.p_particular is not None


def test_minimum_norm_against_kernel_shifts():
    solved = optimize_weights(solve_quasi(build_gram_system(cross_term_pairs())))
    rng = np.random.default_rng(15)
    base = float(np.linalg.norm(solved.p_opt))
    for _ in range(100):
        gamma = solved.kernel @ rng.normal(size=solved.kernel.shape[1])
        assert base <= float(np.linalg.norm(solved.p_opt + gamma)) + 1e-12
    # kernel shifts leave the reassembled operator untouched
    shifted = weights_to_distribution(solved, solved.p_opt + solved.kernel[:, 0])
    assert (
        np.max(
            np.abs(
                assemble(shifted).matrix
                - assemble(weights_to_distribution(solved)).matrix
            )
        )
        < 1e-10
    )


def test_distribution_requires_optimized_weights():
    solved = solve_quasi(build_gram_system(cross_term_pairs()))
    with pytest.raises(ValueError):
        weights_to_distribution(solved)
    dist = weights_to_distribution(optimize_weights(solved))
    assert np.max(np.abs(assemble(dist).matrix - rhat_matrix())) < 1e-10


# ---------------------------------------------------------------------------
# Orthogonal selection and splitting
# ---------------------------------------------------------------------------


def test_bell_orthogonal_subset_is_computational(std_cfg):
    op = HermitianOperator(DIMS22, bell_matrix())
    sols = solve_sep_eigen(op, std_cfg)
    subset = orthogonal_subset(sols)
    kept = [sols.solutions[i] for i in subset]
    assert len(kept) == 2
    assert all(abs(s.g - 0.5) < 1e-10 for s in kept)
    joints = sorted(int(np.argmax(np.abs(s.state.joint()))) for s in kept)
    assert joints == [0, 3]


def test_bell_split_reproduces_cross_term(std_cfg):
    rho = bell_state()
    sols = solve_sep_eigen(rho.op, std_cfg)
    sigma, remainder = residual_split(rho, None, sols)
    expected_sigma = np.zeros((4, 4))
    expected_sigma[0, 0] = expected_sigma[3, 3] = 0.5
    assert np.max(np.abs(sigma.matrix - expected_sigma)) < 1e-10
    assert np.max(np.abs(remainder.matrix - rhat_matrix())) < 1e-10


def test_empty_selection_returns_input(std_cfg):
    rho = sigma_a_state()
    sols = solve_sep_eigen(rho.op, std_cfg)
    sigma, remainder = residual_split(rho, [], sols)
    assert np.max(np.abs(sigma.matrix)) == 0.0
    assert np.max(np.abs(remainder.matrix - rho.matrix)) < 1e-15


def test_overlapping_selection_is_rejected(std_cfg):
    op = HermitianOperator(DIMS22, bell_matrix())
    sols = solve_sep_eigen(op, std_cfg)
    overlapping = None
    for i in range(len(sols.solutions)):
        for j in range(i + 1, len(sols.solutions)):
            si, sj = sols.solutions[i].state, sols.solutions[j].state
            ov = abs(si.a.overlap(sj.a)) ** 2 * abs(si.b.overlap(sj.b)) ** 2
            if ov > 1e-6:
                overlapping = [i, j]
                break
        if overlapping:
            break
    assert overlapping is not None
    with pytest.raises(NotOrthogonalSelection):
        residual_split(op, overlapping, sols)


# ---------------------------------------------------------------------------
# End-to-end analysis
# ---------------------------------------------------------------------------


def test_analyze_smooth_mixture_is_separable(std_cfg):
    report = analyze(sigma_a_state(), std_cfg)
    assert report.verdict == "Separable"
    assert report.path == "direct"
    weights = sorted((w for w, _ in report.quasi_dist), reverse=True)
    assert np.allclose(weights, [0.625, 0.125, 0.125, 0.125], atol=1e-8)
    assert report.min_weight >= 0.0
    assert report.reassembly_residual <= 1e-10


def test_analyze_bell_is_entangled(std_cfg):
    report = analyze(bell_state(), std_cfg)
    assert report.verdict == "Entangled"
    assert report.path == "split"
    assert len(report.quasi_dist) == 10
    # the exact minimum depends on which family members the solver sampled,
    # but the negativity is always far beyond the verdict tolerance
    assert report.min_weight < -0.2
    assert report.reassembly_residual <= 1e-10
    assert np.max(np.abs(assemble(report.quasi_dist).matrix - bell_matrix())) < 1e-10
    assert report.split_solutions is not None


def test_analyze_maximally_mixed(std_cfg):
    rho = validate_density(np.eye(4) / 4.0, DIMS22)
    report = analyze(rho, std_cfg)
    assert report.verdict == "Separable"
    assert abs(report.quasi_dist.total_weight - 1.0) < 1e-9


def test_analyze_basis_mixture_is_separable(std_cfg):
    rho, _ = basis_product_mixture(3, np.random.default_rng(44))
    report = analyze(rho, std_cfg)
    assert report.verdict == "Separable"
    assert report.reassembly_residual <= 1e-8


def test_analyze_generic_mixture_never_entangled(std_cfg):
    rho = generic_product_mixture(2, np.random.default_rng(45))
    report = analyze(rho, std_cfg)
    assert report.verdict != "Entangled"
    if report.verdict == "Inconclusive" and report.quasi_dist is not None:
        assert any("partial transpose" in n for n in report.notes)


def test_analyze_report_bookkeeping(std_cfg):
    report = analyze(sigma_a_state(), std_cfg, tol_neg=1e-6)
    assert report.tol_neg == 1e-6
    assert isinstance(report.solutions, SolutionSet)
    assert report.dims == DIMS22
