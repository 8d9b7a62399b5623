"""Separability eigenvalue solver.

A product state ``|a, b>`` solves the separability eigenvalue equations of a
Hermitian operator L when ``collapse(L, b) |a> = g |a>`` and
``collapse(L, a) |b> = g |b>`` with a common value g.  The solver alternates
the two collapse maps, replacing each factor with an eigenvector of the
other's collapsed operator, and branches over eigenvector indices across
restarts so interior (non-extremal) solutions are reached as well.

Degenerate selections (an eigenspace of dimension two or more at gap below
1e-10) make the next iterate ambiguous.  In that case the restart perturbs
its seed and tries again, except when both factors were already produced by
unambiguous selections and the pair certifies as an exact solution — then the
pair is accepted as the deterministic representative of a flat direction.

Operators are normalized internally to unit spectral scale, so recorded
residuals are relative to the operator's scale and results are exactly
homogeneous under positive scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import EigensolverFailure, NonConvergence
from .state_model import (
    Dims,
    HermitianOperator,
    Ket,
    ProductState,
    canonical_phase_factor,
)

RESIDUAL_TOL = 1e-8
DEGENERACY_TOL = 1e-10
G_AGREE_TOL = 1e-9
FAMILY_SPREAD_CEILING = 1.0 - 1e-4
_DEGENERACY_RETRIES = 3
_PERTURBATION = 0.05


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the alternating solver; defaults fit (2,2) through (3,3)."""

    restarts: int = 200
    max_iters: int = 500
    conv_tol: float = 1e-12
    dedup_g_tol: float = 1e-8
    dedup_fid_tol: float = 1e-8
    family_samples: int = 4
    g_floor: float = 1e-10
    rng_seed: int = 1729
    include_trivial: bool = False
    saturation_window: int = 64

    def __post_init__(self) -> None:
        if self.restarts < 0 or self.max_iters < 1 or self.family_samples < 2:
            raise ValueError("restarts >= 0, max_iters >= 1, family_samples >= 2 required")
        for name in ("conv_tol", "dedup_g_tol", "dedup_fid_tol", "g_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SepEigenSolution:
    """One certified solution: value g, product state, and the worst of the
    two equation residuals (relative to the operator's spectral scale)."""

    g: float
    state: ProductState
    residual: float
    trivial: bool = False
    origin: str = "restart"


@dataclass(frozen=True)
class Family:
    """A sampled continuum of solutions sharing one g value."""

    g: float
    members: tuple[int, ...]
    representatives: tuple[int, ...]


@dataclass(frozen=True)
class SolutionSet:
    """Deduplicated solutions ordered by (g descending, canonical state key).

    ``retained()`` yields the solutions that downstream weight systems use:
    family representatives instead of whole continua, and trivial (|g| below
    g_floor) solutions only when the config includes them.
    """

    dims: Dims
    solutions: tuple[SepEigenSolution, ...]
    families: tuple[Family, ...]
    retained_indices: tuple[int, ...]
    restarts_used: int
    coverage_flag: str
    config: SolverConfig

    def retained(self) -> tuple[SepEigenSolution, ...]:
        return tuple(self.solutions[i] for i in self.retained_indices)

    def g_values(self) -> np.ndarray:
        return np.array([s.g for s in self.solutions])


# ---------------------------------------------------------------------------
# Raw-array iteration kernel
# ---------------------------------------------------------------------------


def _kernel_mats(m4: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Matmul forms of the two collapse maps.

    Row (i, j) of the first matrix against the raveled outer product
    conj(b) x b gives sum_kl m4[i,k,j,l] conj(b_k) b_l; the iteration kernel
    runs hundreds of collapses per restart, and a plain matrix product beats
    re-contracting the rank-4 tensor every time.
    """
    da, db = m4.shape[0], m4.shape[1]
    ma = np.ascontiguousarray(m4.transpose(0, 2, 1, 3).reshape(da * da, db * db))
    mb = np.ascontiguousarray(m4.transpose(1, 3, 0, 2).reshape(db * db, da * da))
    return ma, mb


def _collapse_on_a(ma: np.ndarray, da: int, b: np.ndarray) -> np.ndarray:
    # Hermitian up to rounding; eigh and the residual checks tolerate that.
    return (ma @ (b.conj()[:, None] * b).ravel()).reshape(da, da)


def _collapse_on_b(mb: np.ndarray, db: int, a: np.ndarray) -> np.ndarray:
    return (mb @ (a.conj()[:, None] * a).ravel()).reshape(db, db)


def _certify(
    ma: np.ndarray,
    mb: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    mat_b: np.ndarray | None = None,
):
    """Return (g, residual) when (a, b) solves both equations at tolerance.

    ``mat_b`` may carry a collapse of the current ``a`` that the caller
    already computed this sweep.
    """
    mat_a = _collapse_on_a(ma, a.size, b)
    if mat_b is None:
        mat_b = _collapse_on_b(mb, b.size, a)
    ya = mat_a @ a
    yb = mat_b @ b
    ga = float(np.real(np.vdot(a, ya)))
    gb = float(np.real(np.vdot(b, yb)))
    if abs(ga - gb) > G_AGREE_TOL:
        return None
    g = (ga + gb) / 2.0
    res = max(
        float(np.linalg.norm(ya - g * a)),
        float(np.linalg.norm(yb - g * b)),
    )
    if res <= RESIDUAL_TOL:
        return g, res
    return None


def _eigh2(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form Hermitian 2x2 eigensystem, ascending like eigh.

    The iteration spends most of its time here, and the direct formula is
    several times cheaper than the LAPACK call at this size.
    """
    p = float(h[0, 0].real)
    q = float(h[1, 1].real)
    off = complex(h[1, 0])  # lower triangle, matching eigh's default
    t = 0.5 * (p + q)
    d = 0.5 * (p - q)
    s = abs(off)
    if s == 0.0:
        if p <= q:
            return np.array([p, q]), np.eye(2, dtype=complex)
        return np.array([q, p]), np.eye(2, dtype=complex)[:, ::-1]
    r = math.hypot(d, s)
    # (conj(off), r - d) solves for t + r exactly; its orthogonal complement
    # covers t - r
    x = off.conjugate()
    y = r - d
    nrm = math.hypot(s, y)
    x /= nrm
    y /= nrm
    vecs = np.array([[-y, x], [x.conjugate(), y]], dtype=complex)
    return np.array([t - r, t + r]), vecs


def _select(matrix: np.ndarray, current: np.ndarray, pick):
    """Pick an eigenvector of ``matrix`` or None when selection is ambiguous.

    ``pick`` is ("index", k) for the k-th eigenvalue counted from the top, or
    ("nearest",) for the eigenvalue cluster with the largest projection of
    ``current``.  Eigenvalues closer than 1e-10 (times scale) form a single
    cluster; a chosen cluster of dimension > 1 has no distinguished
    eigenvector and yields None.
    """
    if matrix.shape[0] == 2:
        vals, vecs = _eigh2(matrix)
    else:
        try:
            vals, vecs = np.linalg.eigh(matrix)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise EigensolverFailure(f"eigh failed during iteration: {exc}") from exc
    d = vals.size
    tol = DEGENERACY_TOL * max(1.0, abs(vals[0]), abs(vals[-1]))
    clusters: list[list[int]] = [[0]]
    for i in range(1, d):
        if vals[i] - vals[i - 1] <= tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    if pick[0] == "index":
        target = d - 1 - pick[1]  # descending index -> ascending position
        chosen = next(c for c in clusters if c[0] <= target <= c[-1])
    else:
        weights = np.abs(vecs.conj().T @ current) ** 2
        chosen = max(clusters, key=lambda c: float(np.sum(weights[c])))
    if len(chosen) > 1:
        return None
    return vecs[:, chosen[0]]


def _haar_ket(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _perturbed(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(v.size) + 1j * rng.standard_normal(v.size)
    w = v + _PERTURBATION * noise
    return w / np.linalg.norm(w)


def _alternate(
    m4: np.ndarray,
    a0: np.ndarray,
    b0: np.ndarray,
    policy: tuple,
    cfg: SolverConfig,
    rng: np.random.Generator,
):
    """Run one restart; returns (g, a, b, residual) or None.

    ``policy`` is (mode, ka, kb): mode "max"/"min" selects the extremal
    cluster at every step; mode "nearest" follows the current iterate, with
    optional first-sweep branch indices ka/kb (counted from the top).
    """
    mode, ka, kb = policy
    ma, mb = _kernel_mats(m4)
    da, db = a0.size, b0.size
    a, b = a0, b0
    for _attempt in range(_DEGENERACY_RETRIES + 1):
        cert = _certify(ma, mb, a, b)
        if cert is not None:
            return cert[0], a, b, cert[1]
        a_sel = b_sel = False
        aborted = False
        for it in range(cfg.max_iters):
            if mode == "max":
                pick_a = pick_b = ("index", 0)
            elif mode == "min":
                pick_a = ("index", a.size - 1)
                pick_b = ("index", b.size - 1)
            else:
                pick_a = ("index", ka) if (it == 0 and ka is not None) else ("nearest",)
                pick_b = ("index", kb) if (it == 0 and kb is not None) else ("nearest",)
            a_new = _select(_collapse_on_a(ma, da, b), a, pick_a)
            if a_new is None:
                if a_sel and b_sel:
                    cert = _certify(ma, mb, a, b)
                    if cert is not None:
                        return cert[0], a, b, cert[1]
                aborted = True
                break
            a_sel = True
            mat_b = _collapse_on_b(mb, db, a_new)
            b_new = _select(mat_b, b, pick_b)
            if b_new is None:
                if b_sel:
                    cert = _certify(ma, mb, a_new, b, mat_b)
                    if cert is not None:
                        return cert[0], a_new, b, cert[1]
                aborted = True
                break
            b_sel = True
            fid = abs(np.vdot(a_new, a)) ** 2 * abs(np.vdot(b_new, b)) ** 2
            a, b = a_new, b_new
            if fid >= 1.0 - cfg.conv_tol:
                # settled in angle; keep sweeping until the residual is tight
                # enough to certify (linear convergence closes the gap fast)
                cert = _certify(ma, mb, a, b, mat_b)
                if cert is not None:
                    return cert[0], a, b, cert[1]
        if not aborted:
            return None  # max_iters exhausted
        a = _perturbed(a0, rng)
        b = _perturbed(b0, rng)
    return None


# ---------------------------------------------------------------------------
# Accumulation, dedup, families
# ---------------------------------------------------------------------------


class _Pool:
    """Deduplicating accumulator of raw solutions."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.entries: list[dict] = []

    def add(self, g: float, a: np.ndarray, b: np.ndarray, res: float, origin: str) -> bool:
        """Insert or merge; returns True when a new distinct solution appeared."""
        a = a * canonical_phase_factor(a)
        b = b * canonical_phase_factor(b)
        for e in self.entries:
            if abs(e["g"] - g) <= self.cfg.dedup_g_tol:
                fid = abs(np.vdot(e["a"], a)) ** 2 * abs(np.vdot(e["b"], b)) ** 2
                if fid > 1.0 - self.cfg.dedup_fid_tol:
                    if res < e["res"]:
                        e.update(g=g, a=a, b=b, res=res)
                    if origin == "seed":
                        e["origin"] = "seed"
                    return False
        self.entries.append({"g": g, "a": a, "b": b, "res": res, "origin": origin})
        return True


def _greedy_distinct(members: list[int], entries: list[dict]) -> list[int]:
    """Drop members whose state nearly repeats an earlier one (fidelity at or
    above the family spread ceiling)."""
    kept: list[int] = []
    for i in members:
        ei = entries[i]
        for j in kept:
            ej = entries[j]
            fid = abs(np.vdot(ej["a"], ei["a"])) ** 2 * abs(np.vdot(ej["b"], ei["b"])) ** 2
            if fid >= FAMILY_SPREAD_CEILING:
                break
        else:
            kept.append(i)
    return kept


def _greedy_spread(candidates: list[int], entries: list[dict], k: int) -> list[int]:
    """Greedy max-min selection of k representatives by pairwise distance
    1 - fidelity; ties resolve to the earliest candidate."""

    def dist(i: int, j: int) -> float:
        fid = abs(np.vdot(entries[i]["a"], entries[j]["a"])) ** 2
        fid *= abs(np.vdot(entries[i]["b"], entries[j]["b"])) ** 2
        return 1.0 - fid

    chosen = [candidates[0]]
    while len(chosen) < k and len(chosen) < len(candidates):
        best, best_d = None, -1.0
        for c in candidates:
            if c in chosen:
                continue
            d = min(dist(c, ch) for ch in chosen)
            if d > best_d + 1e-12:
                best, best_d = c, d
        chosen.append(best)
    return chosen


def _finalize(
    pool: _Pool,
    dims: Dims,
    scale: float,
    restarts_used: int,
    coverage: str,
    cfg: SolverConfig,
) -> SolutionSet:
    entries = pool.entries
    solutions = []
    for e in entries:
        state = ProductState(Ket.normalized(e["a"]), Ket.normalized(e["b"]))
        g = e["g"] * scale
        solutions.append(
            SepEigenSolution(
                g=g,
                state=state,
                residual=e["res"],
                trivial=abs(g) < cfg.g_floor,
                origin=e["origin"],
            )
        )
    order = sorted(
        range(len(solutions)),
        key=lambda i: (-solutions[i].g, solutions[i].state.sort_key()),
    )
    solutions = [solutions[order[i]] for i in range(len(order))]
    entries = [entries[order[i]] for i in range(len(order))]

    # group by g (descending) with gaps below dedup_g_tol chained together
    groups: list[list[int]] = []
    for i, sol in enumerate(solutions):
        if groups and solutions[groups[-1][-1]].g - sol.g <= cfg.dedup_g_tol:
            groups[-1].append(i)
        else:
            groups.append([i])

    families: list[Family] = []
    retained: list[int] = []
    for group in groups:
        ordered = sorted(group, key=lambda i: (solutions[i].origin != "seed", i))
        distinct = _greedy_distinct(ordered, entries)
        if len(distinct) >= cfg.family_samples:
            reps = sorted(_greedy_spread(distinct, entries, cfg.family_samples))
            g_mean = float(np.mean([solutions[i].g for i in group]))
            families.append(Family(g=g_mean, members=tuple(group), representatives=tuple(reps)))
            retained.extend(reps)
        else:
            retained.extend(group)
    retained = sorted(
        i for i in retained if cfg.include_trivial or not solutions[i].trivial
    )
    return SolutionSet(
        dims=dims,
        solutions=tuple(solutions),
        families=tuple(families),
        retained_indices=tuple(retained),
        restarts_used=restarts_used,
        coverage_flag=coverage,
        config=cfg,
    )


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def _policy_cycle(da: int, db: int) -> list[tuple]:
    cycle: list[tuple] = [("max", None, None), ("min", None, None)]
    cycle += [("nearest", ka, kb) for ka in range(da) for kb in range(db)]
    cycle.append(("nearest", None, None))
    return cycle


def _deterministic_seeds(m4: np.ndarray, da: int, db: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """All pairs of eigenvectors of the two reduced (partial-trace) operators."""
    red_a = np.einsum("ikjk->ij", m4)
    red_b = np.einsum("ikil->kl", m4)
    red_a = (red_a + red_a.conj().T) / 2.0
    red_b = (red_b + red_b.conj().T) / 2.0
    _, va = np.linalg.eigh(red_a)
    _, vb = np.linalg.eigh(red_b)
    seeds = []
    for i in range(da):
        for j in range(db):
            a = va[:, i] * canonical_phase_factor(va[:, i])
            b = vb[:, j] * canonical_phase_factor(vb[:, j])
            seeds.append((a, b))
    return seeds


def _rank_one_product(matrix: np.ndarray, dims: Dims) -> bool:
    vals, vecs = np.linalg.eigh(matrix)
    big = np.abs(vals) > 1e-12
    if int(np.sum(big)) != 1:
        return False
    vec = vecs[:, int(np.argmax(np.abs(vals)))]
    sing = np.linalg.svd(vec.reshape(dims.d_a, dims.d_b), compute_uv=False)
    return bool(sing.size < 2 or sing[1] <= 1e-10)


def solve_sep_eigen(L: HermitianOperator, cfg: SolverConfig | None = None) -> SolutionSet:
    """Enumerate separability eigenvalue solutions of a Hermitian operator.

    Runs deterministic seeds (all pairs of reduced-operator eigenvectors)
    first, then ``cfg.restarts`` random restarts cycling through selection
    policies.  Restarts stop early once ``cfg.saturation_window`` consecutive
    restarts add nothing new.  Coverage is "Complete" only for a rank-one
    operator with a product eigenvector; otherwise the enumeration is a
    well-tested heuristic and is flagged "Heuristic".
    """
    cfg = cfg or SolverConfig()
    dims = L.dims
    da, db = dims.d_a, dims.d_b
    scale = L.spectral_scale()
    pool = _Pool(cfg)
    if scale == 0.0:
        return _finalize(pool, dims, 0.0, 0, "Heuristic", cfg)
    m4 = (L.matrix / scale).reshape(da, db, da, db)

    for idx, (a, b) in enumerate(_deterministic_seeds(m4, da, db)):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed, spawn_key=(0, idx)))
        got = _alternate(m4, a, b, ("nearest", None, None), cfg, rng)
        if got is not None:
            pool.add(got[0], got[1], got[2], got[3], "seed")

    cycle = _policy_cycle(da, db)
    stale = 0
    restarts_used = 0
    for r in range(cfg.restarts):
        if cfg.saturation_window and stale >= cfg.saturation_window:
            break
        restarts_used += 1
        rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed, spawn_key=(1, r)))
        a0, b0 = _haar_ket(rng, da), _haar_ket(rng, db)
        got = _alternate(m4, a0, b0, cycle[r % len(cycle)], cfg, rng)
        if got is not None and pool.add(got[0], got[1], got[2], got[3], "restart"):
            stale = 0
        else:
            stale += 1

    coverage = "Complete" if _rank_one_product(L.matrix, dims) else "Heuristic"
    return _finalize(pool, dims, scale, restarts_used, coverage, cfg)


def sep_iterate(
    L: HermitianOperator, seed: ProductState, cfg: SolverConfig | None = None
) -> SepEigenSolution:
    """Alternating iteration from one seed; raises NonConvergence when no
    certified solution is reached.

    A seed that already solves both equations at tolerance is returned as is.
    """
    cfg = cfg or SolverConfig()
    scale = L.spectral_scale()
    if scale == 0.0:
        raise NonConvergence("the zero operator has no distinguished solutions")
    dims = L.dims
    m4 = (L.matrix / scale).reshape(dims.d_a, dims.d_b, dims.d_a, dims.d_b)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed, spawn_key=(2,)))
    got = _alternate(m4, seed.a.amplitudes, seed.b.amplitudes, ("nearest", None, None), cfg, rng)
    if got is None:
        raise NonConvergence(
            f"no certified solution within {cfg.max_iters} iterations from this seed"
        )
    g, a, b, res = got
    g_final = g * scale
    return SepEigenSolution(
        g=g_final,
        state=ProductState(Ket.normalized(a), Ket.normalized(b)),
        residual=res,
        trivial=abs(g_final) < cfg.g_floor,
        origin="seed",
    )


def sep_norm(
    L: HermitianOperator,
    cfg: SolverConfig | None = None,
    *,
    solutions: SolutionSet | None = None,
) -> float:
    """Largest |<a,b| L |a,b>| over product states, estimated from the solved
    solution set and floored by the best computational product-basis value.

    Pass ``solutions`` to reuse an already-computed solution set for ``L``.
    """
    sols = solutions if solutions is not None else solve_sep_eigen(L, cfg)
    floor = float(np.max(np.abs(np.diag(L.matrix)))) if L.matrix.size else 0.0
    best = max((abs(s.g) for s in sols.solutions), default=0.0)
    return max(floor, best)
