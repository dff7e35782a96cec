"""Dense complex eigen-decomposition, rank estimation and sparse operators.

The eigensolver is a plain Householder-Hessenberg reduction followed by
implicitly shifted complex QR sweeps.  Right eigenvectors come from
back-substitution on the Schur factor, left eigenvectors from forward
substitution on its adjoint, so both sets share one eigenvalue ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

EPS = np.finfo(float).eps
TINY = np.finfo(float).tiny

TOL_EIG = 1e-10
SWEEPS_PER_DIM = 30


class EigenSolverError(RuntimeError):
    """QR iteration did not converge within the sweep cap."""

    def __init__(self, norm: float, iterations: int, dim: int):
        self.norm = norm
        self.iterations = iterations
        self.dim = dim
        super().__init__(
            f"QR iteration failed to converge: dim={dim}, "
            f"||H||_F={norm:.6g}, iterations={iterations}"
        )


def as_complex_matrix(H) -> np.ndarray:
    """Validate and copy `H` into a square complex128 array."""
    if isinstance(H, SparseOperator):
        H = H.to_dense()
    A = np.array(H, dtype=np.complex128, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


# ---------------------------------------------------------------------------
# Hessenberg / Schur
# ---------------------------------------------------------------------------


def hessenberg(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Hs, Q)`` with ``A = Q Hs Q^H`` and ``Hs`` upper Hessenberg."""
    Hs = as_complex_matrix(A)
    n = Hs.shape[0]
    Q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = Hs[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        Hs[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ Hs[k + 1:, k:])
        Hs[:, k + 1:] -= 2.0 * np.outer(Hs[:, k + 1:] @ v, v.conj())
        Q[:, k + 1:] -= 2.0 * np.outer(Q[:, k + 1:] @ v, v.conj())
        Hs[k + 2:, k] = 0.0
    return Hs, Q


def _abs1(z) -> float:
    return abs(z.real) + abs(z.imag)


def _givens(x: complex, y: complex) -> np.ndarray:
    # unitary G with G @ [x, y] = [r, 0]
    ax = abs(x)
    r = np.hypot(ax, abs(y))
    if r == 0.0:
        return np.eye(2, dtype=np.complex128)
    if ax == 0.0:
        return np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=np.complex128)
    c = ax / r
    s = (x / ax) * np.conj(y) / r
    return np.array([[c, s], [-np.conj(s), c]], dtype=np.complex128)


def _wilkinson_shift(a: complex, b: complex, c: complex, d: complex) -> complex:
    # eigenvalue of [[a, b], [c, d]] closest to d
    bc = b * c
    if bc == 0:
        return d
    x = 0.5 * (a - d)
    y = np.sqrt(x * x + bc)
    if abs(x + y) < abs(x - y):
        y = -y
    denom = x + y
    if denom == 0:
        return d
    return d - bc / denom


def _negligible(T: np.ndarray, k: int, lo: int, hi: int, ulp: float, smlnum: float) -> bool:
    """Deflation test for the subdiagonal entry T[k, k-1]."""
    h = T[k, k - 1]
    if _abs1(h) <= smlnum:
        return True
    tst = _abs1(T[k - 1, k - 1]) + _abs1(T[k, k])
    if tst == 0.0:
        if k - 2 >= lo:
            tst += abs(T[k - 1, k - 2].real)
        if k + 1 <= hi:
            tst += abs(T[k + 1, k].real)
    if _abs1(h) <= ulp * tst:
        ab = max(_abs1(h), _abs1(T[k - 1, k]))
        ba = min(_abs1(h), _abs1(T[k - 1, k]))
        diff = T[k - 1, k - 1] - T[k, k]
        aa = max(_abs1(T[k, k]), _abs1(diff))
        bb = min(_abs1(T[k, k]), _abs1(diff))
        s = aa + ab
        if ba * (ab / s) <= max(smlnum, ulp * (bb * (aa / s))):
            return True
    return False


def schur(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``A = Z T Z^H`` with ``T`` upper triangular.

    Raises
    ------
    EigenSolverError
        If more than ``30 * dim`` QR sweeps are needed.
    """
    T, Z = hessenberg(A)
    n = T.shape[0]
    norm = float(np.linalg.norm(T))
    ulp = EPS
    smlnum = TINY * (n / ulp)
    cap = SWEEPS_PER_DIM * n
    sweeps = 0
    its = 0
    hi = n - 1
    while hi > 0:
        # locate the active block [lo, hi]
        lo = hi
        while lo > 0:
            if _negligible(T, lo, 0, hi, ulp, smlnum):
                T[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        sweeps += 1
        its += 1
        if sweeps > cap:
            raise EigenSolverError(norm, sweeps - 1, n)

        if its % 20 == 10:
            mu = T[lo, lo] + 0.75 * abs(T[lo + 1, lo].real)
        elif its % 20 == 0:
            mu = T[hi, hi] + 0.75 * abs(T[hi, hi - 1].real)
        else:
            mu = _wilkinson_shift(T[hi - 1, hi - 1], T[hi - 1, hi], T[hi, hi - 1], T[hi, hi])

        x = T[lo, lo] - mu
        y = T[lo + 1, lo]
        for k in range(lo, hi):
            if k > lo:
                x = T[k, k - 1]
                y = T[k + 1, k - 1]
            G = _givens(x, y)
            c0 = max(k - 1, lo)
            T[k:k + 2, c0:] = G @ T[k:k + 2, c0:]
            r1 = min(k + 3, hi + 1)
            Gh = G.conj().T
            T[:r1, k:k + 2] = T[:r1, k:k + 2] @ Gh
            Z[:, k:k + 2] = Z[:, k:k + 2] @ Gh
            if k > lo:
                T[k + 1, k - 1] = 0.0
    return np.triu(T), Z


# ---------------------------------------------------------------------------
# Eigenvectors
# ---------------------------------------------------------------------------


def _right_triangular_vectors(T: np.ndarray, smin: float) -> np.ndarray:
    n = T.shape[0]
    X = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        lam = T[k, k]
        x = X[:, k]
        x[k] = 1.0
        for i in range(k - 1, -1, -1):
            d = T[i, i] - lam
            if abs(d) < smin:
                d = smin
            x[i] = -(T[i, i + 1:k + 1] @ x[i + 1:k + 1]) / d
            big = abs(x[i])
            if big > 1e150:
                x[i:k + 1] /= big
    return X


def _left_triangular_vectors(T: np.ndarray, smin: float) -> np.ndarray:
    # columns y_k with y_k^H T = T[k,k] y_k^H, i.e. T^H y = conj(lambda) y
    n = T.shape[0]
    Y = np.zeros((n, n), dtype=np.complex128)
    Tc = T.conj()
    for k in range(n):
        lamc = np.conj(T[k, k])
        y = Y[:, k]
        y[k] = 1.0
        for j in range(k + 1, n):
            d = Tc[j, j] - lamc
            if abs(d) < smin:
                d = smin
            y[j] = -(Tc[k:j, j] @ y[k:j]) / d
            big = abs(y[j])
            if big > 1e150:
                y[k:j + 1] /= big
    return Y


@dataclass(frozen=True)
class EigenSystem:
    """All eigenpairs of a square matrix, with matched left eigenvectors.

    ``right[:, i]`` and ``left[:, i]`` are unit-norm and belong to
    ``eigenvalues[i]``; eigenvalues are sorted by (real, imag).
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    residual_right: np.ndarray
    residual_left: np.ndarray
    norm: float

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    def max_residual(self) -> float:
        return float(max(self.residual_right.max(), self.residual_left.max()))


def eig_full(H) -> EigenSystem:
    """Eigenvalues with right and left eigenvectors of a complex matrix.

    Parameters
    ----------
    H : array_like or SparseOperator
        Square complex matrix with finite entries.

    Returns
    -------
    EigenSystem
        Right vectors solve ``H v = lam v``; left vectors solve
        ``H^H u = conj(lam) u``.  Inside a defective cluster the returned
        vectors are (numerically) parallel; that is expected, not an error.
    """
    A = as_complex_matrix(H)
    n = A.shape[0]
    norm = float(np.linalg.norm(A))
    T, Z = schur(A)
    smin = max(EPS * float(np.linalg.norm(T)), TINY * (n / EPS))

    V = Z @ _right_triangular_vectors(T, smin)
    U = Z @ _left_triangular_vectors(T, smin)
    V /= np.linalg.norm(V, axis=0)
    U /= np.linalg.norm(U, axis=0)
    lam = np.diag(T).copy()

    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    V = V[:, order]
    U = U[:, order]
    res_r = np.linalg.norm(A @ V - V * lam, axis=0)
    res_l = np.linalg.norm(A.conj().T @ U - U * lam.conj(), axis=0)
    return EigenSystem(lam, V, U, res_r, res_l, norm)


def eigvals(H) -> np.ndarray:
    """Sorted eigenvalues only (Schur diagonal)."""
    T, _ = schur(as_complex_matrix(H))
    lam = np.diag(T).copy()
    return lam[np.lexsort((lam.imag, lam.real))]


def numerical_rank(vectors: Sequence, tol: float) -> int:
    """Number of singular values above ``tol * sigma_max`` of the stacked vectors."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    vecs = [np.asarray(getattr(v, "amplitudes", v), dtype=np.complex128).ravel() for v in vectors]
    if not vecs:
        return 0
    dims = {v.shape[0] for v in vecs}
    if len(dims) != 1:
        raise ValueError(f"vectors have mismatched dimensions {sorted(dims)}")
    s = np.linalg.svd(np.column_stack(vecs), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


# ---------------------------------------------------------------------------
# Sparse operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparseOperator:
    """Square operator stored as (row, col, value) triplets.

    Duplicates are summed.  Matrix-vector products sum each row's entries in
    triplet order, so results are reproducible bit for bit.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    _csr: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        vals = np.asarray(self.vals, dtype=np.complex128).ravel()
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("triplet arrays must have equal length")
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= self.dim or cols.max() >= self.dim):
            raise ValueError(f"triplet index out of range [0, {self.dim})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite triplet value")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "vals", vals)
        order = np.argsort(rows, kind="stable")
        indptr = np.zeros(self.dim + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        csr = sp.csr_matrix((vals[order], cols[order], indptr), shape=(self.dim, self.dim))
        object.__setattr__(self, "_csr", csr)

    @classmethod
    def from_triplets(cls, dim: int, triplets: Iterable[tuple[int, int, complex]]) -> "SparseOperator":
        trip = list(triplets)
        if not trip:
            return cls.zeros(dim)
        r, c, v = zip(*trip)
        return cls(dim, np.array(r), np.array(c), np.array(v, dtype=np.complex128))

    @classmethod
    def zeros(cls, dim: int) -> "SparseOperator":
        return cls(dim, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.complex128))

    @classmethod
    def from_dense(cls, A) -> "SparseOperator":
        A = np.asarray(A, dtype=np.complex128)
        r, c = np.nonzero(A)
        return cls(A.shape[0], r, c, A[r, c])

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.dim, self.dim), dtype=np.complex128)
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    def to_csr(self) -> sp.csr_matrix:
        return self._csr

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.dim, self.cols, self.rows, self.vals.conj())

    def scaled(self, factor: complex) -> "SparseOperator":
        return SparseOperator(self.dim, self.rows, self.cols, self.vals * factor)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return SparseOperator(
            self.dim,
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.vals, other.vals]),
        )

    def __matmul__(self, v):
        return apply(self, v)

    def norm_1(self) -> float:
        """Maximum absolute column sum."""
        return float(abs(self._csr).sum(axis=0).max()) if self.nnz else 0.0

    def norm_inf(self) -> float:
        """Maximum absolute row sum."""
        return float(abs(self._csr).sum(axis=1).max()) if self.nnz else 0.0

    def spectral_bound(self) -> float:
        """Upper bound ``sqrt(||H||_1 ||H||_inf)`` on the spectral norm."""
        return float(np.sqrt(self.norm_1() * self.norm_inf()))

    def frobenius(self) -> float:
        summed = self._csr.copy()
        summed.sum_duplicates()
        return float(np.linalg.norm(summed.data))


def apply(op: SparseOperator, v):
    """Sparse matrix-vector product; accepts arrays or StateVector-like objects."""
    amps = getattr(v, "amplitudes", v)
    x = np.asarray(amps, dtype=np.complex128)
    if x.shape != (op.dim,):
        raise ValueError(f"dimension mismatch: operator {op.dim}, vector {x.shape}")
    out = op.to_csr() @ x
    if hasattr(v, "with_amplitudes"):
        return v.with_amplitudes(out)
    return out


# ---------------------------------------------------------------------------
# Matrix exponential
# ---------------------------------------------------------------------------

_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant."""
    A = as_complex_matrix(A)
    n = A.shape[0]
    norm1 = float(np.abs(A).sum(axis=0).max())
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
    A = A / (2.0 ** s)
    b = _PADE13
    ident = np.eye(n, dtype=np.complex128)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R
