"""Sparse LU with partial pivoting and cheap single-row replacement.

``factorize`` computes ``L U = P M`` once. ``replace_row`` then represents a
matrix ``M'`` that differs from ``M`` in one row ``z`` without refactoring:
with ``p`` the position of row ``z`` in ``P M``, the new row of ``P M'`` is
reproduced by keeping ``U`` and swapping row ``p`` of ``L`` for ``l`` where
``l^T U = new_row``. The effective lower factor is therefore

    L' = L0 + E (Lam - L0[R, :])

with ``R`` the replaced positions, ``E`` their unit columns and ``Lam`` the
stacked ``l`` rows. Solves against ``L'`` go through ``L0`` plus an ``m x m``
capacitance system ``C = Lam @ L0^{-1} E`` (``m = len(R)``), so ``U`` is never
touched and every update costs two sparse triangular solves.

Each update grows the stored data; once ``update_count`` hits
``refactor_limit`` or the stored nonzeros exceed ``fill_limit`` times the
fresh factorization, the represented matrix is refactored from scratch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve_triangular

from .errors import SingularMatrix

PIVOT_TOL = 1e-12
REFACTOR_LIMIT = 64
FILL_LIMIT = 4.0


@dataclass(frozen=True)
class RowReplacement:
    """Replace row ``z`` (1-based) of the represented matrix with ``new_row``."""

    z: int
    new_row: object

    def __post_init__(self):
        if int(self.z) < 1:
            raise ValueError("row index is 1-based")


def _as_dense_row(row, n):
    if sp.issparse(row):
        row = row.toarray()
    row = np.asarray(row, dtype=float).ravel()
    if row.shape != (n,):
        raise ValueError(f"replacement row has length {row.shape[0]}, expected {n}")
    return row


@dataclass(frozen=True, eq=False)
class LupFactors:
    L0: sp.csr_matrix            # unit lower triangular, from the last full factorization
    U: sp.csr_matrix             # upper triangular
    perm: np.ndarray             # perm[i] = position of row i of M inside P M
    base: sp.csr_matrix          # matrix that L0 U factors (up to P)
    refactor_limit: int = REFACTOR_LIMIT
    fill_limit: float = FILL_LIMIT
    update_count: int = 0
    refactor_count: int = 0
    rows: dict = field(default_factory=dict)       # 0-based row -> dense replacement row
    positions: tuple = ()                          # replaced positions in P M order
    lam: np.ndarray | None = None                  # (m, n) stacked l rows
    Z: np.ndarray | None = None                    # (n, m) columns L0^{-1} e_p
    cap: tuple | None = None                       # lu_factor of C
    _Ut: sp.csr_matrix | None = None

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def P(self) -> sp.csr_matrix:
        n = self.n
        return sp.csr_matrix((np.ones(n), (self.perm, np.arange(n))), shape=(n, n))

    @property
    def L(self) -> sp.csr_matrix:
        """Effective lower factor ``L'``: ``L0`` with replaced rows swapped for ``l``.

        Lower triangular (with unit diagonal) only while ``update_count == 0``.
        """
        if not self.positions:
            return self.L0
        L = self.L0.tolil()
        for j, p in enumerate(self.positions):
            L[p, :] = self.lam[j]
        out = L.tocsr()
        out.eliminate_zeros()
        return out

    @property
    def matrix(self) -> sp.csr_matrix:
        """The matrix currently represented."""
        if not self.rows:
            return self.base
        m = self.base.tolil()
        for i, row in self.rows.items():
            m[i, :] = row
        out = m.tocsr()
        out.eliminate_zeros()
        return out

    @property
    def fill_stats(self) -> dict:
        base = self.L0.nnz + self.U.nnz
        upd = 0
        if self.positions:
            upd = int(np.count_nonzero(self.lam)) + int(np.count_nonzero(self.Z))
        return {"nnz_L": self.L0.nnz, "nnz_U": self.U.nnz, "nnz_updates": upd,
                "growth": (base + upd) / max(base, 1)}

    def matvec(self, x) -> np.ndarray:
        y = self.base @ x
        for i, row in self.rows.items():
            y[i] = row @ x
        return y


def factorize(m, *, refactor_limit: int = REFACTOR_LIMIT, fill_limit: float = FILL_LIMIT,
              refactor_count: int = 0) -> LupFactors:
    """LU with partial pivoting and natural column order, so ``L U = P M``."""
    m = sp.csc_matrix(m, dtype=float)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    n = m.shape[0]
    try:
        lu = splu(m, permc_spec="NATURAL", diag_pivot_thresh=1.0,
                  options={"SymmetricMode": False})
    except RuntimeError as exc:
        raise SingularMatrix(f"factorization failed: {exc}") from None
    U = sp.csr_matrix(lu.U)
    U.sort_indices()
    diag = np.abs(U.diagonal())
    k = int(np.argmin(diag)) if n else 0
    if n and diag[k] < PIVOT_TOL:
        raise SingularMatrix(f"pivot {diag[k]:.3e} below {PIVOT_TOL:g}", pivot=float(diag[k]), index=k)
    L = sp.csr_matrix(lu.L)
    L.sort_indices()
    base = sp.csr_matrix(m)
    base.sort_indices()
    return LupFactors(L0=L, U=U, perm=np.asarray(lu.perm_r, dtype=np.int64), base=base,
                      refactor_limit=refactor_limit, fill_limit=fill_limit,
                      refactor_count=refactor_count, _Ut=sp.csr_matrix(U.T))


def _lower(L, r):
    return spsolve_triangular(L, r, lower=True, unit_diagonal=True, overwrite_b=True)


def solve(f: LupFactors, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    n = f.n
    if rhs.shape != (n,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({n},)")
    pb = np.empty(n)
    pb[f.perm] = rhs
    y = _lower(f.L0, pb.copy())
    if f.positions:
        t = f.lam @ y - pb[list(f.positions)]
        y = y - f.Z @ sla.lu_solve(f.cap, t)
    return spsolve_triangular(f.U, y, lower=False, overwrite_b=True)


def replace_row(f: LupFactors, r: RowReplacement) -> LupFactors:
    """Return factors of ``M`` with row ``r.z`` replaced; ``f`` is not modified."""
    n = f.n
    z = int(r.z) - 1
    if not 0 <= z < n:
        raise ValueError(f"row {r.z} outside 1..{n}")
    new_row = _as_dense_row(r.new_row, n)
    p = int(f.perm[z])
    ell = spsolve_triangular(f._Ut, new_row.copy(), lower=True)

    positions = list(f.positions)
    if p in positions:
        j = positions.index(p)
        lam = f.lam.copy()
        lam[j] = ell
        Z = f.Z
    else:
        e = np.zeros(n)
        e[p] = 1.0
        zcol = _lower(f.L0, e)
        positions.append(p)
        lam = ell[None, :] if f.lam is None else np.vstack([f.lam, ell])
        Z = zcol[:, None] if f.Z is None else np.column_stack([f.Z, zcol])
    C = lam @ Z
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)  # exact zeros are reported below
        cap = sla.lu_factor(C, check_finite=False)
    piv = np.abs(np.diag(cap[0]))
    k = int(np.argmin(piv))
    if piv[k] < PIVOT_TOL:
        raise SingularMatrix(f"row replacement at {r.z} makes the matrix singular "
                             f"(update pivot {piv[k]:.3e})", pivot=float(piv[k]), index=z)
    rows = dict(f.rows)
    rows[z] = new_row
    out = LupFactors(L0=f.L0, U=f.U, perm=f.perm, base=f.base, refactor_limit=f.refactor_limit,
                     fill_limit=f.fill_limit, update_count=f.update_count + 1,
                     refactor_count=f.refactor_count, rows=rows, positions=tuple(positions),
                     lam=lam, Z=Z, cap=cap, _Ut=f._Ut)
    if out.update_count >= out.refactor_limit or out.fill_stats["growth"] > out.fill_limit:
        return refactorize(out)
    return out


def refactorize(f: LupFactors) -> LupFactors:
    return factorize(f.matrix, refactor_limit=f.refactor_limit, fill_limit=f.fill_limit,
                     refactor_count=f.refactor_count + 1)
