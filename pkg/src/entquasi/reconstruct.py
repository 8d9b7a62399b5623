"""Quasi-probability reconstruction of states over product states.

A pure state with Schmidt coefficients ``l_1 >= l_2 >= ...`` is expanded as a
signed mixture: weights ``l_k^2`` on the Schmidt pairs, plus for every pair
``k < l`` four interference terms with weights ``+-l_k l_l``.  The
interference terms are genuine product states built by superposing the two
Schmidt vectors on each factor with phases ``i^n``; summed with signs
``(+, -, +, -)`` they reproduce the off-diagonal cross operator exactly.
Mixed states are expanded eigenvector by eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EigensolverFailure, NotOrthogonal
from .state_model import (
    DensityOperator,
    Dims,
    Ket,
    ProductState,
    QuasiDistribution,
    canonical_phase_factor,
    lex_key,
)

SPECTRAL_FLOOR = 1e-12
SCHMIDT_FLOOR = 1e-10
ORTHO_TOL = 1e-8
MERGE_FIDELITY = 1.0 - 1e-10

_PHASES = (1.0, 1.0j, -1.0, -1.0j)
_SIGNS = (1.0, -1.0, 1.0, -1.0)


@dataclass(frozen=True)
class SchmidtForm:
    """Schmidt data of a pure bipartite ket.

    ``coefficients`` are positive and descending; ties are broken by the
    lexicographic order of the canonicalized left kets.  Left kets are
    phase-canonical; right kets carry the compensating phases so that
    ``sum_k coefficients[k] |left_k> x |right_k>`` reproduces the input.
    """

    dims: Dims
    coefficients: tuple[float, ...]
    left_basis: tuple[Ket, ...]
    right_basis: tuple[Ket, ...]

    @property
    def rank(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class PureExpansion:
    """Signed product expansion of a pure state.

    ``assemble(positive_part) - assemble(negative_part)`` reproduces the
    projector of the expanded ket; the positive weights total ``1 + mu`` and
    the negative-part weights (stored positive) total ``mu``.
    """

    mu: float
    positive_part: QuasiDistribution
    negative_part: QuasiDistribution


def spectral_decompose(rho: DensityOperator) -> list[tuple[float, Ket]]:
    """Eigen-decomposition with eigenvalues below 1e-12 dropped,
    ordered by descending eigenvalue."""
    try:
        vals, vecs = np.linalg.eigh(rho.matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise EigensolverFailure(f"eigh failed: {exc}") from exc
    out: list[tuple[float, Ket]] = []
    for i in range(vals.size - 1, -1, -1):
        p = float(vals[i])
        if p > SPECTRAL_FLOOR:
            out.append((p, Ket.normalized(vecs[:, i])))
    return out


def schmidt_decompose(psi: Ket, dims: Dims) -> SchmidtForm:
    """SVD-based Schmidt decomposition with coefficients below 1e-10 dropped."""
    if psi.dim != dims.total:
        raise DimensionMismatch(
            f"ket dim {psi.dim} does not match dims ({dims.d_a}, {dims.d_b})"
        )
    coeff_matrix = psi.amplitudes.reshape(dims.d_a, dims.d_b)
    try:
        u, s, vh = np.linalg.svd(coeff_matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolverFailure(f"svd failed: {exc}") from exc
    entries = []
    for k in range(s.size):
        lam = float(s[k])
        if lam <= SCHMIDT_FLOOR:
            continue
        # Shift the canonicalizing phase of the left factor onto the right
        # factor so each term l * e x f keeps its exact value.
        w = canonical_phase_factor(u[:, k])
        left = Ket.normalized(u[:, k] * w)
        right = Ket.normalized(vh[k, :] * np.conj(w), canonicalize=False)
        entries.append((lam, left, right))
    entries.sort(key=lambda t: (-round(t[0], 12), lex_key(t[1])))
    return SchmidtForm(
        dims=dims,
        coefficients=tuple(t[0] for t in entries),
        left_basis=tuple(t[1] for t in entries),
        right_basis=tuple(t[2] for t in entries),
    )


def _interference_terms(
    e1: np.ndarray, f1: np.ndarray, e2: np.ndarray, f2: np.ndarray, weight: float
) -> list[tuple[float, ProductState]]:
    """Four signed product terms whose sum is
    ``weight * (|e1,f1><e2,f2| + |e2,f2><e1,f1|)``.

    For n = 0..3 the states are ``(e1 + i^n e2)/sqrt(2) x (f1 + i^n f2)/sqrt(2)``
    with signs ``(+, -, +, -)``; the factor-wise orthogonality of the inputs
    makes each superposition unit norm.
    """
    terms = []
    for phase, sign in zip(_PHASES, _SIGNS):
        a = Ket.normalized((e1 + phase * e2) / np.sqrt(2.0))
        b = Ket.normalized((f1 + phase * f2) / np.sqrt(2.0))
        terms.append((sign * weight, ProductState(a, b)))
    return terms


def interference_expansion(u: ProductState, v: ProductState) -> QuasiDistribution:
    """Expand the symmetrized cross operator ``|u><v| + |v><u|`` of two
    factor-wise orthogonal product states into four signed product terms."""
    if u.dims != v.dims:
        raise DimensionMismatch(
            f"product states live on {u.dims.as_tuple()} vs {v.dims.as_tuple()}"
        )
    for name, x, y in (("A", u.a, v.a), ("B", u.b, v.b)):
        ov = abs(x.overlap(y))
        if ov > ORTHO_TOL:
            raise NotOrthogonal(
                f"factor-{name} kets overlap by {ov:.3e}, above {ORTHO_TOL}"
            )
    terms = _interference_terms(
        u.a.amplitudes, u.b.amplitudes, v.a.amplitudes, v.b.amplitudes, 1.0
    )
    return QuasiDistribution(u.dims, tuple(terms))


def _pure_terms(psi: Ket, dims: Dims) -> list[tuple[float, ProductState]]:
    """Signed product terms of a pure-state projector, in deterministic order:
    Schmidt diagonal first, then the interference quad of each pair."""
    sf = schmidt_decompose(psi, dims)
    lams = sf.coefficients
    terms: list[tuple[float, ProductState]] = []
    for k in range(sf.rank):
        terms.append((lams[k] ** 2, ProductState(sf.left_basis[k], sf.right_basis[k])))
    for k in range(sf.rank):
        for l in range(k + 1, sf.rank):
            terms.extend(
                _interference_terms(
                    sf.left_basis[k].amplitudes,
                    sf.right_basis[k].amplitudes,
                    sf.left_basis[l].amplitudes,
                    sf.right_basis[l].amplitudes,
                    lams[k] * lams[l],
                )
            )
    return terms


def pure_to_quasi(psi: Ket, dims: Dims) -> PureExpansion:
    """Split the signed expansion of a pure state into its positive part
    (weight ``1 + mu``) and negative part (weight ``mu``, stored positive).

    A product ket (Schmidt rank 1) has ``mu = 0`` and an empty negative part.
    """
    sf = schmidt_decompose(psi, dims)
    lams = np.asarray(sf.coefficients)
    mu = 0.0
    for k in range(lams.size):
        for l in range(k + 1, lams.size):
            mu += 2.0 * lams[k] * lams[l]
    pos: list[tuple[float, ProductState]] = []
    neg: list[tuple[float, ProductState]] = []
    for w, state in _pure_terms(psi, dims):
        if w >= 0:
            pos.append((w, state))
        else:
            neg.append((-w, state))
    return PureExpansion(
        mu=float(mu),
        positive_part=QuasiDistribution(dims, tuple(pos)),
        negative_part=QuasiDistribution(dims, tuple(neg)),
    )


def _merge_terms(
    terms: list[tuple[float, ProductState]],
) -> list[tuple[float, ProductState]]:
    """Sum weights of near-duplicate product states (fidelity > 1 - 1e-10),
    keeping first-seen order."""
    merged: list[tuple[float, ProductState]] = []
    for w, state in terms:
        for i, (wi, si) in enumerate(merged):
            if state.fidelity(si) > MERGE_FIDELITY:
                merged[i] = (wi + w, si)
                break
        else:
            merged.append((w, state))
    return merged


def reconstruct_quasi(rho: DensityOperator) -> QuasiDistribution:
    """Quasi-probability decomposition of a density operator: spectral mixture
    of the pure-state expansions, with near-duplicate states merged.

    The result is density-tagged (weights sum to one) and reassembles the
    input within 1e-9.
    """
    terms: list[tuple[float, ProductState]] = []
    for p, psi in spectral_decompose(rho):
        terms.extend((p * w, state) for w, state in _pure_terms(psi, rho.dims))
    return QuasiDistribution(rho.dims, tuple(_merge_terms(terms)), density=True)
