"""
Double Forms - Fiberwise algebra of double forms in an orthonormal frame

A (p,q) double form is stored by its values on pairs of increasing
multi-indices, enumerated in itertools.combinations order. Leading axes of
the coefficient array are batch axes (one fiber per point); every operation
broadcasts over them.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations, product
from math import comb, factorial, prod
from typing import Sequence, Tuple, Union

import numpy as np

import config
from utils.errors import DegreeError, DimensionMismatchError, RankDeficientError, SymmetryError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiIndex:
    """Strictly increasing basis indices, 1-based."""
    entries: Tuple[int, ...] = ()

    def __post_init__(self):
        entries = tuple(int(i) for i in self.entries)
        if any(a >= b for a, b in zip(entries, entries[1:])):
            raise ValueError(f"Multi-index entries must increase strictly, got {entries}")
        if entries and entries[0] < 1:
            raise ValueError(f"Multi-index entries start at 1, got {entries}")
        object.__setattr__(self, "entries", entries)

    @property
    def degree(self) -> int:
        return len(self.entries)

    def __str__(self) -> str:
        return "(" + ",".join(str(i) for i in self.entries) + ")"


# --- Basis bookkeeping ---

@lru_cache(maxsize=None)
def basis(n: int, p: int) -> Tuple[Tuple[int, ...], ...]:
    """Increasing 0-based p-tuples of range(n), in storage order."""
    return tuple(combinations(range(n), p))


@lru_cache(maxsize=None)
def _positions(n: int, p: int) -> dict:
    return {index: pos for pos, index in enumerate(basis(n, p))}


def _sort_sign(seq: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sign of the permutation sorting `seq`; 0 when an entry repeats."""
    seq = tuple(seq)
    if len(set(seq)) != len(seq):
        return 0, ()
    inversions = sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


class DoubleForm:
    """Element of Λ^p ⊗ Λ^q over an n-dimensional inner-product space."""

    __slots__ = ("n", "p", "q", "coeffs")

    def __init__(self, n: int, p: int, q: int, coeffs):
        n, p, q = int(n), int(p), int(q)
        if not 0 < n <= config.MAX_DIMENSION:
            raise DegreeError(f"Dimension {n} outside 1..{config.MAX_DIMENSION}")
        if not (0 <= p <= n and 0 <= q <= n):
            raise DegreeError(f"Bidegree ({p},{q}) outside 0..{n}")
        arr = np.array(coeffs, dtype=float)
        expected = (comb(n, p), comb(n, q))
        if arr.ndim < 2 or arr.shape[-2:] != expected:
            raise DimensionMismatchError(
                f"Coefficient shape {arr.shape} does not end with {expected} for ({p},{q}) forms in n={n}"
            )
        arr.setflags(write=False)
        self.n, self.p, self.q, self.coeffs = n, p, q, arr

    @property
    def bidegree(self) -> Tuple[int, int]:
        return self.p, self.q

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[:-2]

    def value(self, rows, cols):
        """Value on (e_I, e_J) for 1-based index sequences in any order."""
        rows = rows.entries if isinstance(rows, MultiIndex) else tuple(rows)
        cols = cols.entries if isinstance(cols, MultiIndex) else tuple(cols)
        if len(rows) != self.p or len(cols) != self.q:
            raise DimensionMismatchError(f"Expected index degrees ({self.p},{self.q})")
        if any(not 1 <= i <= self.n for i in rows + cols):
            raise DimensionMismatchError(f"Indices must lie in 1..{self.n}")
        row_sign, row_sorted = _sort_sign(i - 1 for i in rows)
        col_sign, col_sorted = _sort_sign(i - 1 for i in cols)
        if row_sign == 0 or col_sign == 0:
            out = np.zeros(self.batch_shape)
        else:
            out = row_sign * col_sign * self.coeffs[
                ..., _positions(self.n, self.p)[row_sorted], _positions(self.n, self.q)[col_sorted]
            ]
        return float(out) if np.ndim(out) == 0 else out

    def scalar(self):
        """The value of a (0,0) form."""
        if self.bidegree != (0, 0):
            raise DegreeError(f"Not a scalar: bidegree {self.bidegree}")
        out = self.coeffs[..., 0, 0]
        return float(out) if np.ndim(out) == 0 else np.array(out)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def is_symmetric(self, tol: float = config.SYMMETRY_TOL) -> bool:
        if self.p != self.q:
            return False
        asym = np.max(np.abs(self.coeffs - np.swapaxes(self.coeffs, -1, -2))) if self.coeffs.size else 0.0
        return bool(asym <= tol * (1.0 + self.max_abs()))

    def _same_space(self, other: "DoubleForm"):
        if not isinstance(other, DoubleForm):
            raise TypeError(f"Expected DoubleForm, got {type(other).__name__}")
        if (self.n, self.p, self.q) != (other.n, other.p, other.q):
            raise DimensionMismatchError(
                f"Cannot combine ({self.p},{self.q}) in n={self.n} with ({other.p},{other.q}) in n={other.n}"
            )

    def __add__(self, other: "DoubleForm") -> "DoubleForm":
        self._same_space(other)
        return DoubleForm(self.n, self.p, self.q, self.coeffs + other.coeffs)

    def __sub__(self, other: "DoubleForm") -> "DoubleForm":
        self._same_space(other)
        return DoubleForm(self.n, self.p, self.q, self.coeffs - other.coeffs)

    def __neg__(self) -> "DoubleForm":
        return DoubleForm(self.n, self.p, self.q, -self.coeffs)

    def __mul__(self, scalar) -> "DoubleForm":
        if isinstance(scalar, DoubleForm):
            return NotImplemented
        factor = np.asarray(scalar, dtype=float)
        if factor.ndim:
            factor = factor[..., None, None]
        return DoubleForm(self.n, self.p, self.q, self.coeffs * factor)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "DoubleForm":
        factor = np.asarray(scalar, dtype=float)
        return self * (1.0 / factor)

    def __getitem__(self, index) -> "DoubleForm":
        if not self.batch_shape:
            raise IndexError("An unbatched double form cannot be indexed")
        return DoubleForm(self.n, self.p, self.q, self.coeffs[index])

    def __repr__(self) -> str:
        batch = f", batch={self.batch_shape}" if self.batch_shape else ""
        return f"DoubleForm(n={self.n}, bidegree=({self.p},{self.q}){batch})"


class BianchiStatus(str, Enum):
    VERIFIED = "verified"
    VIOLATED = "violated"
    UNCHECKED = "unchecked"


@dataclass(frozen=True)
class CurvatureStructure:
    """A symmetric (p,p) double form, flagged with its first Bianchi status."""
    form: DoubleForm
    bianchi_flag: BianchiStatus = BianchiStatus.UNCHECKED

    def __post_init__(self):
        if not self.form.is_symmetric():
            raise SymmetryError(f"Curvature structures must be symmetric (p,p) forms, got {self.form!r}")

    @classmethod
    def from_form(cls, form: DoubleForm, check_bianchi: bool = True,
                  tol: float = config.SYMMETRY_TOL) -> "CurvatureStructure":
        if not check_bianchi:
            return cls(form)
        residual = first_bianchi_residual(form)
        ok = residual <= tol * (1.0 + form.max_abs())
        return cls(form, BianchiStatus.VERIFIED if ok else BianchiStatus.VIOLATED)

    @property
    def n(self) -> int:
        return self.form.n

    @property
    def p(self) -> int:
        return self.form.p


FormLike = Union[DoubleForm, CurvatureStructure]


def as_form(value: FormLike) -> DoubleForm:
    if isinstance(value, CurvatureStructure):
        return value.form
    if isinstance(value, DoubleForm):
        return value
    raise TypeError(f"Expected DoubleForm or CurvatureStructure, got {type(value).__name__}")


# --- Constructors ---

def zeros(n: int, p: int, q: int, batch: Tuple[int, ...] = ()) -> DoubleForm:
    return DoubleForm(n, p, q, np.zeros(tuple(batch) + (comb(n, p), comb(n, q))))


def identity(n: int, batch: Tuple[int, ...] = ()) -> DoubleForm:
    """The (0,0) unit 1."""
    return DoubleForm(n, 0, 0, np.ones(tuple(batch) + (1, 1)))


def metric(n: int, batch: Tuple[int, ...] = ()) -> DoubleForm:
    """The metric g as a (1,1) form."""
    return DoubleForm(n, 1, 1, np.broadcast_to(np.eye(n), tuple(batch) + (n, n)))


@lru_cache(maxsize=None)
def metric_power(n: int, m: int) -> DoubleForm:
    """g^m, with g^0 = 1."""
    if m == 0:
        return identity(n)
    return power(metric(n), m)


# --- Products ---

@lru_cache(maxsize=None)
def _split_table(n: int, total: int, part: int):
    """Every split K = A ⊔ B with |A| = part, with sign(A, B)."""
    pos_a, pos_b = _positions(n, part), _positions(n, total - part)
    rows_a, rows_b, signs = [], [], []
    for K in basis(n, total):
        ra, rb, sg = [], [], []
        for A in combinations(K, part):
            B = tuple(i for i in K if i not in A)
            ra.append(pos_a[A])
            rb.append(pos_b[B])
            sg.append(_sort_sign(A + B)[0])
        rows_a.append(ra)
        rows_b.append(rb)
        signs.append(sg)
    return (np.array(rows_a, dtype=np.intp), np.array(rows_b, dtype=np.intp),
            np.array(signs, dtype=float))


@lru_cache(maxsize=None)
def _wedge_plan(n: int, p: int, q: int, r: int, s: int):
    ra, rb, rs = _split_table(n, p + r, p)
    ca, cb, cs = _split_table(n, q + s, q)
    a = ra[:, None, :, None] * comb(n, q) + ca[None, :, None, :]
    b = rb[:, None, :, None] * comb(n, s) + cb[None, :, None, :]
    sign = rs[:, None, :, None] * cs[None, :, None, :]
    width = ra.shape[1] * ca.shape[1]
    return a.reshape(-1, width), b.reshape(-1, width), sign.reshape(-1, width)


def _check_dimension(first: DoubleForm, second: DoubleForm):
    if first.n != second.n:
        raise DimensionMismatchError(f"Dimension mismatch: {first.n} vs {second.n}")


def wedge(omega: DoubleForm, theta: DoubleForm) -> DoubleForm:
    """Exterior (Kulkarni-Nomizu) product by shuffle sums in each block.

    Products whose degree exceeds n vanish and come back as the zero form of
    bidegree clamped to n.
    """
    omega, theta = as_form(omega), as_form(theta)
    _check_dimension(omega, theta)
    n = omega.n
    P, Q = omega.p + theta.p, omega.q + theta.q
    batch = np.broadcast_shapes(omega.batch_shape, theta.batch_shape)
    if P > n or Q > n:
        return zeros(n, min(P, n), min(Q, n), batch)
    a, b, sign = _wedge_plan(n, omega.p, omega.q, theta.p, theta.q)
    left = omega.coeffs.reshape(omega.batch_shape + (-1,))
    right = theta.coeffs.reshape(theta.batch_shape + (-1,))
    flat = (left[..., a] * right[..., b] * sign).sum(axis=-1)
    return DoubleForm(n, P, Q, flat.reshape(batch + (comb(n, P), comb(n, Q))))


def power(omega: DoubleForm, k: int) -> DoubleForm:
    if int(k) != k or k < 1:
        raise DegreeError(f"Powers start at 1, got {k}")
    omega = as_form(omega)
    result = omega
    for _ in range(int(k) - 1):
        result = wedge(result, omega)
    return result


def metric_mul(omega: DoubleForm) -> DoubleForm:
    """g·ω."""
    omega = as_form(omega)
    return wedge(metric(omega.n), omega)


# --- Contraction ---

@lru_cache(maxsize=None)
def _insert_table(n: int, p: int):
    """Position and sign of e_m ∧ e_I' in basis(n, p), for every (p-1)-index I' and every m."""
    pos = _positions(n, p)
    base = basis(n, p - 1)
    idx = np.zeros((len(base), n), dtype=np.intp)
    sign = np.zeros((len(base), n))
    for r, I in enumerate(base):
        for m in range(n):
            if m in I:
                continue
            idx[r, m] = pos[tuple(sorted(I + (m,)))]
            sign[r, m] = (-1) ** sum(1 for i in I if i < m)
    return idx, sign


@lru_cache(maxsize=None)
def _contract_plan(n: int, p: int, q: int):
    ri, rs = _insert_table(n, p)
    ci, cs = _insert_table(n, q)
    flat = ri[:, None, :] * comb(n, q) + ci[None, :, :]
    sign = rs[:, None, :] * cs[None, :, :]
    return flat.reshape(-1, n), sign.reshape(-1, n)


def contract(omega: DoubleForm) -> DoubleForm:
    """(cω)(x, y) = Σ_m ω(e_m ∧ x, e_m ∧ y)."""
    omega = as_form(omega)
    n, p, q = omega.n, omega.p, omega.q
    if p == 0 or q == 0:
        raise DegreeError(f"Cannot contract a ({p},{q}) form")
    flat, sign = _contract_plan(n, p, q)
    coeffs = omega.coeffs.reshape(omega.batch_shape + (-1,))
    out = (coeffs[..., flat] * sign).sum(axis=-1)
    return DoubleForm(n, p - 1, q - 1, out.reshape(omega.batch_shape + (comb(n, p - 1), comb(n, q - 1))))


def contract_power(omega: DoubleForm, times: int) -> DoubleForm:
    result = as_form(omega)
    for _ in range(int(times)):
        result = contract(result)
    return result


# --- Hodge star and inner product ---

@lru_cache(maxsize=None)
def _star_table(n: int, p: int):
    """For every (n-p)-index J: the complementary p-index I and sign(I, J)."""
    pos = _positions(n, p)
    source, sign = [], []
    for J in basis(n, n - p):
        I = tuple(i for i in range(n) if i not in J)
        source.append(pos[I])
        sign.append(_sort_sign(I + J)[0])
    return np.array(source, dtype=np.intp), np.array(sign, dtype=float)


def hodge_star(omega: DoubleForm) -> DoubleForm:
    """(*ω)(e_{I^c}, e_{J^c}) = sign(I, I^c)·sign(J, J^c)·ω(e_I, e_J)."""
    omega = as_form(omega)
    n = omega.n
    rsrc, rsign = _star_table(n, omega.p)
    csrc, csign = _star_table(n, omega.q)
    out = omega.coeffs[..., rsrc[:, None], csrc[None, :]] * (rsign[:, None] * csign[None, :])
    return DoubleForm(n, n - omega.p, n - omega.q, out)


def inner(omega: DoubleForm, theta: DoubleForm):
    """Pointwise inner product: the coefficient dot product in the orthonormal frame."""
    omega, theta = as_form(omega), as_form(theta)
    omega._same_space(theta)
    out = np.sum(omega.coeffs * theta.coeffs, axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def norm(omega: DoubleForm):
    return np.sqrt(inner(omega, omega))


def transpose(omega: DoubleForm) -> DoubleForm:
    omega = as_form(omega)
    return DoubleForm(omega.n, omega.q, omega.p, np.swapaxes(omega.coeffs, -1, -2))


def symmetrize(omega: DoubleForm) -> DoubleForm:
    omega = as_form(omega)
    if omega.p != omega.q:
        raise DegreeError(f"Only (p,p) forms can be symmetrized, got {omega.bidegree}")
    return DoubleForm(omega.n, omega.p, omega.p, 0.5 * (omega.coeffs + np.swapaxes(omega.coeffs, -1, -2)))


# --- Tensor conversion and frame changes ---

@lru_cache(maxsize=None)
def _full_table(n: int, p: int):
    pos = _positions(n, p)
    idx, sign = [], []
    for t in product(range(n), repeat=p):
        s, ordered = _sort_sign(t)
        idx.append(pos[ordered] if s else 0)
        sign.append(s)
    return np.array(idx, dtype=np.intp), np.array(sign, dtype=float)


@lru_cache(maxsize=None)
def _increasing_offsets(n: int, p: int) -> np.ndarray:
    return np.array([sum(i * n ** (p - 1 - k) for k, i in enumerate(I)) for I in basis(n, p)], dtype=np.intp)


def to_tensor(omega: DoubleForm) -> np.ndarray:
    """Fully antisymmetric array with p + q trailing axes of length n."""
    omega = as_form(omega)
    n, p, q = omega.n, omega.p, omega.q
    ri, rs = _full_table(n, p)
    ci, cs = _full_table(n, q)
    full = omega.coeffs[..., ri[:, None], ci[None, :]] * (rs[:, None] * cs[None, :])
    return full.reshape(omega.batch_shape + (n,) * (p + q))


def from_tensor(array, n: int, p: int, q: int) -> DoubleForm:
    """Read the increasing-index entries of an antisymmetric array."""
    arr = np.asarray(array, dtype=float)
    rank = p + q
    if arr.ndim < rank or arr.shape[arr.ndim - rank:] != (n,) * rank:
        raise DimensionMismatchError(f"Array of shape {arr.shape} is not a rank-{rank} tensor over n={n}")
    batch = arr.shape[:arr.ndim - rank]
    flat = arr.reshape(batch + (n ** p, n ** q))
    ro, co = _increasing_offsets(n, p), _increasing_offsets(n, q)
    return DoubleForm(n, p, q, flat[..., ro[:, None], co[None, :]])


def compound_matrix(matrix: np.ndarray, p: int) -> np.ndarray:
    """p-th compound: the p×p minors det(M[I, J]) over increasing I, J."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[-1]
    if p == 0:
        return np.ones(matrix.shape[:-2] + (1, 1))
    rows = np.array(basis(n, p), dtype=np.intp)
    sub = matrix[..., rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(sub)


def change_frame(omega: DoubleForm, frame: np.ndarray) -> DoubleForm:
    """Re-express ω in the frame whose vectors are the columns of the orthogonal matrix `frame`."""
    omega = as_form(omega)
    frame = np.asarray(frame, dtype=float)
    if frame.shape[-2:] != (omega.n, omega.n):
        raise DimensionMismatchError(f"Frame of shape {frame.shape} does not act on n={omega.n}")
    left = compound_matrix(frame, omega.p)
    right = compound_matrix(frame, omega.q)
    return DoubleForm(omega.n, omega.p, omega.q, np.swapaxes(left, -1, -2) @ omega.coeffs @ right)


# --- F_h ---

@lru_cache(maxsize=None)
def _derivation_table(n: int, p: int):
    """For each increasing I, slot k and vector e_b: where I with i_k -> b lands, its sign, and h's flat index."""
    pos = _positions(n, p)
    rows = basis(n, p)
    width = p * n
    target = np.zeros((len(rows), width), dtype=np.intp)
    sign = np.zeros((len(rows), width))
    h_index = np.zeros((len(rows), width), dtype=np.intp)
    for r, I in enumerate(rows):
        for k, ik in enumerate(I):
            for b in range(n):
                col = k * n + b
                h_index[r, col] = ik * n + b
                s, ordered = _sort_sign(I[:k] + (b,) + I[k + 1:])
                if s:
                    target[r, col] = pos[ordered]
                    sign[r, col] = s
    return target, sign, h_index


def derivation_matrix(h: DoubleForm, p: int) -> np.ndarray:
    """Matrix of the derivation extending h on Λ^p, in the increasing basis."""
    h = as_form(h)
    n = h.n
    target, sign, h_index = _derivation_table(n, p)
    size = comb(n, p)
    out = np.zeros(h.batch_shape + (size, size))
    if p == 0:
        return out
    values = h.coeffs.reshape(h.batch_shape + (-1,))[..., h_index] * sign
    rows = np.arange(size)
    for col in range(target.shape[1]):
        out[..., rows, target[:, col]] += values[..., col]
    return out


def _check_f_h_inputs(h: DoubleForm, omega: DoubleForm):
    if h.bidegree != (1, 1) or not h.is_symmetric():
        raise SymmetryError("F_h needs a symmetric (1,1) form h")
    if not omega.is_symmetric():
        raise SymmetryError(f"F_h acts on symmetric (p,p) forms, got {omega!r}")
    _check_dimension(h, omega)


def f_h(h: FormLike, omega: FormLike) -> DoubleForm:
    """F_h as the derivation extension of k ↦ h∘k + k∘h."""
    h, omega = as_form(h), as_form(omega)
    _check_f_h_inputs(h, omega)
    mat = derivation_matrix(h, omega.p)
    out = mat @ omega.coeffs + omega.coeffs @ np.swapaxes(mat, -1, -2)
    return DoubleForm(omega.n, omega.p, omega.q, out)


def f_h_eigen(h: FormLike, omega: FormLike) -> DoubleForm:
    """F_h through an eigenbasis of h: each coefficient times the sum of the involved eigenvalues."""
    h, omega = as_form(h), as_form(omega)
    _check_f_h_inputs(h, omega)
    eigenvalues, frame = np.linalg.eigh(h.coeffs)
    rotated = change_frame(omega, frame)
    rows = np.array(basis(omega.n, omega.p), dtype=np.intp)
    sums = eigenvalues[..., rows].sum(axis=-1)
    scaled = rotated.coeffs * (sums[..., :, None] + sums[..., None, :])
    back = DoubleForm(omega.n, omega.p, omega.q, scaled)
    return change_frame(back, np.swapaxes(frame, -1, -2))


# --- First Bianchi identity ---

@lru_cache(maxsize=None)
def _bianchi_plan(n: int, p: int):
    pos = _positions(n, p)
    uppers, lowers = basis(n, p + 1), basis(n, p - 1)
    width = comb(n, p)
    flat = np.zeros((len(uppers), len(lowers), p + 1), dtype=np.intp)
    sign = np.zeros((len(uppers), len(lowers), p + 1))
    for a, K in enumerate(uppers):
        for j, kj in enumerate(K):
            row = pos[K[:j] + K[j + 1:]]
            for c, L in enumerate(lowers):
                if kj in L:
                    continue
                col = pos[tuple(sorted(L + (kj,)))]
                flat[a, c, j] = row * width + col
                sign[a, c, j] = (-1) ** (j + 1 + sum(1 for i in L if i < kj))
    return flat, sign


def first_bianchi_map(omega: FormLike) -> DoubleForm:
    """b(ω)(K, L) = Σ_j (-1)^j ω(K without k_j, k_j ∧ L), a (p+1, p-1) form."""
    omega = as_form(omega)
    n, p = omega.n, omega.p
    if p != omega.q or p < 1:
        raise DegreeError(f"The Bianchi map acts on (p,p) forms with p >= 1, got {omega.bidegree}")
    if p + 1 > n:
        raise DegreeError(f"No ({p + 1},{p - 1}) forms in dimension {n}")
    flat, sign = _bianchi_plan(n, p)
    coeffs = omega.coeffs.reshape(omega.batch_shape + (-1,))
    out = (coeffs[..., flat] * sign).sum(axis=-1)
    return DoubleForm(n, p + 1, p - 1, out)


def first_bianchi_residual(omega: FormLike) -> float:
    omega = as_form(omega)
    if omega.p + 1 > omega.n:
        return 0.0
    return first_bianchi_map(omega).max_abs()


# --- Primitive decomposition ---

@dataclass(frozen=True)
class PrimitiveDecomposition:
    """components[j] is the traceless (p-j, p-j) form multiplying g^j."""
    n: int
    p: int
    components: Tuple[DoubleForm, ...]

    def reassemble(self) -> DoubleForm:
        total = None
        for j, component in enumerate(self.components):
            term = wedge(metric_power(self.n, j), component)
            total = term if total is None else total + term
        return total

    def traceless_residual(self) -> float:
        residuals = [contract(c).max_abs() for c in self.components if c.p > 0]
        return max(residuals, default=0.0)


def primitive_decompose(omega: FormLike) -> PrimitiveDecomposition:
    """Split ω = Σ_j g^j·ω_j with c·ω_j = 0, by back-substitution from the scalar part."""
    omega = as_form(omega)
    n, p = omega.n, omega.p
    if omega.q != p:
        raise DegreeError(f"Decomposition needs a (p,p) form, got {omega.bidegree}")
    if n < 2 * p:
        raise DegreeError(f"Decomposition of ({p},{p}) forms needs n >= {2 * p}, got n={n}")
    components = [None] * (p + 1)
    for i in range(p, -1, -1):
        remainder = omega
        for j in range(i + 1, p + 1):
            remainder = remainder - wedge(metric_power(n, j), components[j])
        coefficient = factorial(i) * prod(n - 2 * p + i + t + 1 for t in range(i))
        components[i] = contract_power(remainder, i) / coefficient
    return PrimitiveDecomposition(n=n, p=p, components=tuple(components))


# --- Evaluation on planes ---

def _unit_pvector(vectors, n: int, p: int) -> np.ndarray:
    vecs = np.asarray(vectors, dtype=float).reshape(p, n)
    q_mat, r_mat = np.linalg.qr(vecs.T)
    diag = np.abs(np.diag(r_mat))
    if diag.min() <= config.SOLVE_TOL * max(1.0, diag.max()):
        raise RankDeficientError(f"{p} vectors do not span a {p}-plane")
    if not np.allclose(vecs @ vecs.T, np.eye(p), atol=config.SOLVE_TOL):
        logger.debug("Orthonormalizing a non-orthonormal plane basis")
    rows = np.array(basis(n, p), dtype=np.intp)
    return np.linalg.det(q_mat[rows, :])


def sectional_value(omega: FormLike, plane) -> float:
    """ω on the unit simple p-vector of span(plane), both arguments equal."""
    omega = as_form(omega)
    n, p = omega.n, omega.p
    if omega.q != p:
        raise DegreeError(f"Sectional values need a (p,p) form, got {omega.bidegree}")
    if p == 0:
        return omega.scalar()
    coeffs = _unit_pvector(plane, n, p)
    out = np.einsum("i,...ij,j->...", coeffs, omega.coeffs, coeffs)
    return float(out) if np.ndim(out) == 0 else out


def orthogonal_contraction(R: FormLike, vector, k: int = 1, normalized: bool = True):
    """Full contraction of R^k restricted to the orthogonal complement of `vector`.

    Normalized by (2k)! this is T_2k(v, v) for a unit v; unnormalized it is the
    raw c^{2k} of the restricted power.
    """
    R = as_form(R)
    n = R.n
    if 2 * k > n - 1:
        raise DegreeError(f"R^{k} restricted to a hyperplane of dimension {n - 1} vanishes")
    v = np.asarray(vector, dtype=float).reshape(n)
    length = np.linalg.norm(v)
    if length <= config.EXACT_TOL:
        raise RankDeficientError("Cannot take the orthogonal complement of the zero vector")
    frame, _ = np.linalg.qr((v / length)[:, None], mode="complete")
    rotated = change_frame(power(R, k), frame)
    keep = np.array([0 not in I for I in basis(n, 2 * k)])
    diag = np.diagonal(rotated.coeffs, axis1=-2, axis2=-1)[..., keep].sum(axis=-1)
    out = diag if normalized else diag * factorial(2 * k)
    return float(out) if np.ndim(out) == 0 else out


def dump(omega: FormLike) -> str:
    """One line per nonzero coefficient: 1-based I, J and the value, lexicographic."""
    omega = as_form(omega)
    if omega.batch_shape:
        raise DimensionMismatchError("Only single fibers can be dumped")
    lines = []
    for r, I in enumerate(basis(omega.n, omega.p)):
        for c, J in enumerate(basis(omega.n, omega.q)):
            value = omega.coeffs[r, c]
            if value != 0.0:
                lines.append(f"{MultiIndex(tuple(i + 1 for i in I))} "
                             f"{MultiIndex(tuple(j + 1 for j in J))} {value:.12e}")
    return "\n".join(lines)
