"""Bipartite state model: kets, product states, operators, quasi-distributions.

Joint indices follow the Kronecker convention ``row = i_a * d_b + i_b``, so a
product ket is ``np.kron(a, b)``.  All containers are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MalformedInput,
    NotHermitian,
    NotPSD,
    NotUnitTrace,
)

HERM_TOL = 1e-9
TRACE_TOL = 1e-9
PSD_TOL = 1e-9
KET_NORM_TOL = 1e-12
PHASE_FLOOR = 1e-10
WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class Dims:
    """Factor dimensions ``(d_a, d_b)`` of a bipartite space."""

    d_a: int
    d_b: int

    def __post_init__(self) -> None:
        if self.d_a < 1 or self.d_b < 1:
            raise DimensionMismatch(
                f"factor dimensions must be positive, got ({self.d_a}, {self.d_b})"
            )

    @property
    def total(self) -> int:
        return self.d_a * self.d_b

    def as_tuple(self) -> tuple[int, int]:
        return (self.d_a, self.d_b)


def canonical_phase_factor(amplitudes: np.ndarray) -> complex:
    """Unit factor that makes the first significant amplitude real positive.

    The reference amplitude is the first component with modulus above
    ``PHASE_FLOOR``.  Multiplying an already-canonical vector by the returned
    factor (exactly ``1.0``) leaves it bit-for-bit unchanged, so the rule is
    idempotent and preserves every modulus exactly.
    """
    for z in amplitudes:
        if abs(z) > PHASE_FLOOR:
            if z.imag == 0.0 and z.real > 0.0:
                return 1.0
            return z.conjugate() / abs(z)
    return 1.0


class Ket:
    """Unit-norm state vector with a canonical global phase.

    Pass ``canonicalize=False`` to keep the phase as given; Schmidt right
    factors rely on this to carry the relative phases that make the
    decomposition reproduce its input.
    """

    __slots__ = ("_amps",)

    def __init__(self, amplitudes, *, canonicalize: bool = True):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1).copy()
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > KET_NORM_TOL:
            raise ValueError(f"ket must be unit norm within {KET_NORM_TOL}, got {norm}")
        if canonicalize:
            amps = amps * canonical_phase_factor(amps)
        amps.setflags(write=False)
        self._amps = amps

    @classmethod
    def normalized(cls, amplitudes, *, canonicalize: bool = True) -> "Ket":
        """Build a ket from an arbitrary nonzero vector by normalizing it."""
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(v))
        if norm < 1e-14:
            raise ValueError("cannot normalize a (near-)zero vector")
        return cls(v / norm, canonicalize=canonicalize)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def dim(self) -> int:
        return self._amps.size

    def overlap(self, other: "Ket") -> complex:
        """Inner product ``<self|other>``."""
        return complex(np.vdot(self._amps, other._amps))

    def fidelity(self, other: "Ket") -> float:
        return abs(self.overlap(other)) ** 2

    def is_phase_canonical(self) -> bool:
        return canonical_phase_factor(self._amps) == 1.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ket):
            return NotImplemented
        return np.array_equal(self._amps, other._amps)

    def __hash__(self) -> int:
        return hash(self._amps.tobytes())

    def __repr__(self) -> str:
        return f"Ket({np.array2string(self._amps, precision=6, suppress_small=True)})"


def lex_key(ket: Ket) -> tuple[float, ...]:
    """Deterministic ordering key; descending by rounded amplitude parts."""
    parts: list[float] = []
    for z in ket.amplitudes:
        parts.append(-round(float(z.real), 10))
        parts.append(-round(float(z.imag), 10))
    return tuple(parts)


@dataclass(frozen=True)
class ProductState:
    """A pair of factor kets; both are stored phase-canonical.

    The canonicalization is safe because a product state only ever enters
    assembled operators through its projector, which is invariant under
    independent phases of the two factors.
    """

    a: Ket
    b: Ket

    def __post_init__(self) -> None:
        if not self.a.is_phase_canonical():
            object.__setattr__(self, "a", Ket(self.a.amplitudes))
        if not self.b.is_phase_canonical():
            object.__setattr__(self, "b", Ket(self.b.amplitudes))

    @property
    def dims(self) -> Dims:
        return Dims(self.a.dim, self.b.dim)

    def joint(self) -> np.ndarray:
        return np.kron(self.a.amplitudes, self.b.amplitudes)

    def projector(self) -> np.ndarray:
        j = self.joint()
        return np.outer(j, j.conj())

    def overlap(self, other: "ProductState") -> complex:
        return self.a.overlap(other.a) * self.b.overlap(other.b)

    def fidelity(self, other: "ProductState") -> float:
        return abs(self.overlap(other)) ** 2

    def sort_key(self) -> tuple[float, ...]:
        return lex_key(self.a) + lex_key(self.b)


@dataclass(frozen=True)
class HermitianOperator:
    """Square operator on the joint space, symmetrized on construction."""

    dims: Dims
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"operator must be square, got shape {m.shape}")
        if m.shape[0] != self.dims.total:
            raise DimensionMismatch(
                f"operator side {m.shape[0]} does not match dims "
                f"({self.dims.d_a}, {self.dims.d_b}) with product {self.dims.total}"
            )
        dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if dev > HERM_TOL:
            raise NotHermitian(f"max |M - M^dag| = {dev:.3e} exceeds {HERM_TOL}")
        m = (m + m.conj().T) / 2.0
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def side(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, state: ProductState) -> float:
        j = state.joint()
        return float(np.real(np.vdot(j, self.matrix @ j)))

    def spectral_scale(self) -> float:
        """Largest eigenvalue magnitude (0.0 for the zero operator)."""
        if float(np.max(np.abs(self.matrix))) == 0.0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


@dataclass(frozen=True)
class DensityOperator:
    """A validated quantum state: Hermitian, unit trace, positive."""

    op: HermitianOperator
    trace: float

    @property
    def dims(self) -> Dims:
        return self.op.dims

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix


def validate_density(
    raw,
    dims: Dims,
    *,
    herm_tol: float = HERM_TOL,
    trace_tol: float = TRACE_TOL,
    psd_tol: float = PSD_TOL,
) -> DensityOperator:
    """Check a raw matrix and wrap it as a density operator.

    Raises DimensionMismatch, NotHermitian, NotUnitTrace or NotPSD; the
    stored matrix is the exactly symmetrized ``(M + M^dag) / 2``.
    """
    m = np.asarray(raw, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != dims.total:
        raise DimensionMismatch(
            f"expected a {dims.total} x {dims.total} matrix for dims "
            f"({dims.d_a}, {dims.d_b}), got shape {m.shape}"
        )
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > herm_tol:
        raise NotHermitian(f"max |M - M^dag| = {dev:.3e} exceeds {herm_tol}")
    op = HermitianOperator(dims, m)
    tr = float(np.real(np.trace(op.matrix)))
    if abs(tr - 1.0) > trace_tol:
        raise NotUnitTrace(f"trace = {tr!r} deviates from 1 beyond {trace_tol}")
    lo = float(np.min(np.linalg.eigvalsh(op.matrix)))
    if lo < -psd_tol:
        raise NotPSD(f"minimum eigenvalue {lo:.3e} is below -{psd_tol}")
    return DensityOperator(op, tr)


@dataclass(frozen=True)
class QuasiDistribution:
    """Signed weights on product states.

    Terms with ``|weight| < WEIGHT_FLOOR`` are pruned on construction.  With
    ``density=True`` the distribution claims to represent a density operator
    and the weights must sum to one within 1e-9.
    """

    dims: Dims
    terms: tuple[tuple[float, ProductState], ...]
    density: bool = False

    def __post_init__(self) -> None:
        kept: list[tuple[float, ProductState]] = []
        for weight, state in self.terms:
            if state.dims != self.dims:
                raise DimensionMismatch(
                    f"term dims {state.dims.as_tuple()} do not match "
                    f"distribution dims {self.dims.as_tuple()}"
                )
            if abs(weight) >= WEIGHT_FLOOR:
                kept.append((float(weight), state))
        object.__setattr__(self, "terms", tuple(kept))
        if self.density:
            total = self.total_weight
            if abs(total - 1.0) > 1e-9:
                raise ValueError(
                    f"density-tagged distribution sums to {total!r}, not 1"
                )

    @property
    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.terms))

    @property
    def min_weight(self) -> float:
        return min((w for w, _ in self.terms), default=0.0)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[float, ProductState]]:
        return iter(self.terms)


def partial_collapse(op: HermitianOperator, side: str, ket: Ket) -> np.ndarray:
    """Collapse one factor of ``op`` onto ``ket``; returns a Hermitian matrix
    acting on the *other* factor.

    ``side="B"`` gives ``tr_B(op (1_A x |ket><ket|))`` on factor A;
    ``side="A"`` gives ``tr_A(op (|ket><ket| x 1_B))`` on factor B.
    For any product state, ``<a| collapse(op, "B", b) |a>`` equals the full
    inner product ``<a,b| op |a,b>``.
    """
    da, db = op.dims.d_a, op.dims.d_b
    m4 = op.matrix.reshape(da, db, da, db)
    v = ket.amplitudes
    if side == "B":
        if ket.dim != db:
            raise DimensionMismatch(f"ket dim {ket.dim} != d_b = {db}")
        out = np.einsum("ikjl,k,l->ij", m4, v.conj(), v)
    elif side == "A":
        if ket.dim != da:
            raise DimensionMismatch(f"ket dim {ket.dim} != d_a = {da}")
        out = np.einsum("ikjl,i,j->kl", m4, v.conj(), v)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return (out + out.conj().T) / 2.0


def reduced_a(op: HermitianOperator) -> np.ndarray:
    """Partial trace over factor B."""
    da, db = op.dims.d_a, op.dims.d_b
    return np.einsum("ikjk->ij", op.matrix.reshape(da, db, da, db))


def reduced_b(op: HermitianOperator) -> np.ndarray:
    """Partial trace over factor A."""
    da, db = op.dims.d_a, op.dims.d_b
    return np.einsum("ikil->kl", op.matrix.reshape(da, db, da, db))


def assemble(dist: QuasiDistribution) -> HermitianOperator:
    """Weighted sum of product-state projectors."""
    n = dist.dims.total
    acc = np.zeros((n, n), dtype=complex)
    for weight, state in dist.terms:
        acc += weight * state.projector()
    return HermitianOperator(dist.dims, acc)


# ---------------------------------------------------------------------------
# JSON interchange
#
# State file:          {"dims": [d_a, d_b], "matrix": [[[re, im], ...], ...]}
# Decomposition file:  {"dims": [d_a, d_b],
#                       "terms": [{"weight": w, "a": [[re, im], ...],
#                                  "b": [[re, im], ...]}, ...]}
# ---------------------------------------------------------------------------


def _complex_pair(entry, where: str) -> complex:
    if (
        not isinstance(entry, (list, tuple))
        or len(entry) != 2
        or not all(isinstance(x, (int, float)) for x in entry)
    ):
        raise MalformedInput(f"{where}: expected a [re, im] pair, got {entry!r}")
    return complex(entry[0], entry[1])


def _parse_dims(doc: dict, where: str) -> Dims:
    if "dims" not in doc:
        raise MalformedInput(f"{where}: missing field 'dims'")
    dims = doc["dims"]
    if (
        not isinstance(dims, (list, tuple))
        or len(dims) != 2
        or not all(isinstance(d, int) and d >= 1 for d in dims)
    ):
        raise MalformedInput(f"{where}: 'dims' must be two positive integers, got {dims!r}")
    return Dims(dims[0], dims[1])


def _parse_ket(entries, where: str) -> Ket:
    if not isinstance(entries, list) or not entries:
        raise MalformedInput(f"{where}: expected a non-empty list of [re, im] pairs")
    amps = [_complex_pair(e, f"{where}[{i}]") for i, e in enumerate(entries)]
    try:
        return Ket(amps)
    except ValueError as exc:
        raise MalformedInput(f"{where}: {exc}") from exc


def matrix_to_jsonable(matrix: np.ndarray) -> list[list[list[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def ket_to_jsonable(ket: Ket) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in ket.amplitudes]


def state_to_jsonable(rho: DensityOperator) -> dict:
    return {"dims": list(rho.dims.as_tuple()), "matrix": matrix_to_jsonable(rho.matrix)}


def _parse_matrix(doc: dict, dims: Dims, where: str) -> np.ndarray:
    if "matrix" not in doc:
        raise MalformedInput(f"{where}: missing field 'matrix'")
    rows = doc["matrix"]
    n = dims.total
    if not isinstance(rows, list) or len(rows) != n:
        raise MalformedInput(f"'matrix' must have {n} rows, got {len(rows) if isinstance(rows, list) else type(rows).__name__}")
    m = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise MalformedInput(f"'matrix' row {i} must have {n} entries")
        for j, entry in enumerate(row):
            m[i, j] = _complex_pair(entry, f"'matrix'[{i}][{j}]")
    return m


def state_from_jsonable(doc) -> DensityOperator:
    """Parse and validate a state document; raises MalformedInput on schema
    violations and the validation errors on bad physics."""
    if not isinstance(doc, dict):
        raise MalformedInput("state document: expected a JSON object")
    dims = _parse_dims(doc, "state document")
    m = _parse_matrix(doc, dims, "state document")
    return validate_density(m, dims)


def operator_from_jsonable(doc) -> HermitianOperator:
    """Parse a Hermitian operator document; unlike states, no trace or
    positivity requirements apply."""
    if not isinstance(doc, dict):
        raise MalformedInput("operator document: expected a JSON object")
    dims = _parse_dims(doc, "operator document")
    m = _parse_matrix(doc, dims, "operator document")
    return HermitianOperator(dims, m)


def decomposition_to_jsonable(dist: QuasiDistribution) -> dict:
    return {
        "dims": list(dist.dims.as_tuple()),
        "terms": [
            {"weight": float(w), "a": ket_to_jsonable(s.a), "b": ket_to_jsonable(s.b)}
            for w, s in dist.terms
        ],
    }


def decomposition_from_jsonable(doc) -> QuasiDistribution:
    if not isinstance(doc, dict):
        raise MalformedInput("decomposition document: expected a JSON object")
    dims = _parse_dims(doc, "decomposition document")
    if "terms" not in doc:
        raise MalformedInput("decomposition document: missing field 'terms'")
    raw_terms = doc["terms"]
    if not isinstance(raw_terms, list):
        raise MalformedInput("'terms' must be a list")
    terms: list[tuple[float, ProductState]] = []
    for i, term in enumerate(raw_terms):
        if not isinstance(term, dict):
            raise MalformedInput(f"'terms'[{i}] must be an object")
        for field in ("weight", "a", "b"):
            if field not in term:
                raise MalformedInput(f"'terms'[{i}]: missing field '{field}'")
        if not isinstance(term["weight"], (int, float)):
            raise MalformedInput(f"'terms'[{i}].weight must be a number")
        a = _parse_ket(term["a"], f"'terms'[{i}].a")
        b = _parse_ket(term["b"], f"'terms'[{i}].b")
        if a.dim != dims.d_a or b.dim != dims.d_b:
            raise MalformedInput(
                f"'terms'[{i}]: ket dims ({a.dim}, {b.dim}) do not match 'dims' "
                f"({dims.d_a}, {dims.d_b})"
            )
        terms.append((float(term["weight"]), ProductState(a, b)))
    return QuasiDistribution(dims, tuple(terms))


def load_state(path: str) -> DensityOperator:
    return state_from_jsonable(_load_json(path))


def load_decomposition(path: str) -> QuasiDistribution:
    return decomposition_from_jsonable(_load_json(path))


def load_operator(path: str) -> HermitianOperator:
    return operator_from_jsonable(_load_json(path))


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path} is not valid JSON: {exc}") from exc
