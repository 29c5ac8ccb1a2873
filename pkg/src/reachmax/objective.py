"""Probability of absorption at the target, ``f(S) = <pi, c(S)>``.

``c(S)`` solves ``(I - A(S)) c = b(S)``. A :class:`ReachSolver` keeps the
factors of ``I - A(S)`` for one selection and derives neighbouring
selections through row replacements, which is what the greedy optimizers
iterate on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import lup
from .chain import ChainSpec, assemble, state_set

CLAMP_WARN = 1e-9


@dataclass(frozen=True, eq=False)
class ReachResult:
    c: np.ndarray
    f: float
    residual: float


class _Tables:
    """Per-chain data shared by every solver derived from the same root."""

    def __init__(self, spec: ChainSpec):
        n = spec.n_transient
        self.spec = spec
        self.q = sp.csr_matrix(spec.q[:, :n])
        self.q_bar = sp.csr_matrix(spec.q_bar[:, :n])
        self.q_sigma = spec.q[:, spec.sigma_column].toarray().ravel()
        self.q_bar_sigma = spec.q_bar[:, spec.sigma_column].toarray().ravel()

    def system_row(self, z: int, selected: bool) -> np.ndarray:
        """Row ``z`` (0-based) of ``I - A`` as a dense vector."""
        m = self.q if selected else self.q_bar
        row = np.zeros(self.spec.n_transient)
        lo, hi = m.indptr[z], m.indptr[z + 1]
        row[m.indices[lo:hi]] = -m.data[lo:hi]
        row[z] += 1.0
        return row

    def rhs(self, selection) -> np.ndarray:
        b = self.q_bar_sigma.copy()
        if selection:
            idx = np.asarray(selection) - 1
            b[idx] = self.q_sigma[idx]
        return b


class ReachSolver:
    """Factored system for one selection; cheap to extend by one state.

    Solvers are immutable: :meth:`extend` and :meth:`with_selection` return
    new solvers that share the parent's base factorization.
    """

    def __init__(self, spec: ChainSpec, selection=(), *, refactor_limit: int = lup.REFACTOR_LIMIT,
                 fill_limit: float = lup.FILL_LIMIT, _tables=None, _factors=None):
        self.spec = spec
        self.selection = state_set(selection, spec.n_transient)
        self._tables = _tables or _Tables(spec)
        if _factors is None:
            a = assemble(spec, self.selection)
            m = sp.identity(spec.n_transient, format="csr") - a.A
            _factors = lup.factorize(m, refactor_limit=refactor_limit, fill_limit=fill_limit)
        self.factors = _factors

    def _derive(self, selection, factors):
        return ReachSolver(self.spec, selection, _tables=self._tables, _factors=factors)

    def extend(self, z: int) -> "ReachSolver":
        """Solver for ``S | {z}`` via a single row replacement."""
        z = int(z)
        if z in self.selection:
            raise ValueError(f"state {z} already selected")
        row = self._tables.system_row(z - 1, True)
        f = lup.replace_row(self.factors, lup.RowReplacement(z, row))
        return self._derive(self.selection + (z,), f)

    def with_selection(self, s) -> "ReachSolver":
        s = state_set(s, self.spec.n_transient)
        cur, new = set(self.selection), set(s)
        f = self.factors
        for z in sorted(cur ^ new):
            row = self._tables.system_row(z - 1, z in new)
            f = lup.replace_row(f, lup.RowReplacement(z, row))
        return self._derive(s, f)

    @cached_property
    def result(self) -> ReachResult:
        b = self._tables.rhs(self.selection)
        c = lup.solve(self.factors, b)
        residual = float(np.max(np.abs(self.factors.matvec(c) - b), initial=0.0))
        lo, hi = float(c.min()), float(c.max())
        excess = max(-lo, hi - 1.0, 0.0)
        if excess > CLAMP_WARN:
            warnings.warn(f"reach probabilities left [0, 1] by {excess:.3e}; clamping", RuntimeWarning)
        c = np.clip(c, 0.0, 1.0)
        c.flags.writeable = False
        return ReachResult(c=c, f=float(self.spec.pi @ c), residual=residual)

    @property
    def f(self) -> float:
        return self.result.f


def eval_reach(spec: ChainSpec, s, solver: ReachSolver | None = None) -> ReachResult:
    """Reach probabilities for selection ``s``.

    With ``solver`` given, the factors for ``s`` are derived from it by row
    replacements instead of a fresh factorization.
    """
    if solver is None:
        return ReachSolver(spec, s).result
    return solver.with_selection(s).result


def marginal_gain(spec: ChainSpec, s, z: int, solver: ReachSolver | None = None) -> float:
    base = ReachSolver(spec, s) if solver is None else solver.with_selection(s)
    return base.extend(z).f - base.f


def one_step_value(spec: ChainSpec, s) -> float:
    """Probability of hitting the target on the very first step."""
    s = state_set(s, spec.n_transient)
    if not s:
        return 0.0
    idx = np.asarray(s) - 1
    q_sigma = spec.q[:, spec.sigma_column].toarray().ravel()
    return float(spec.pi[idx] @ q_sigma[idx])


def truncated_reach(spec: ChainSpec, s, steps: int) -> np.ndarray:
    """Per-state probability of hitting the target within ``steps`` steps."""
    a = assemble(spec, s)
    c = np.zeros(spec.n_transient)
    for _ in range(steps):
        c = a.A @ c + a.b
    return c
