"""Problem instances: an absorbing chain with two transition tables.

Transient states are numbered ``1..n``. Each transient state ``i`` owns two
rows: ``q[i]`` (used when ``i`` is selected, so it may move to the target
absorber) and ``q_bar[i]`` (used otherwise; its target column is zero).
Absorbing states carry string labels; one of them is the target.

Both tables are stored as CSR matrices of shape ``(n, n + r)``: columns
``0..n-1`` are transient states, column ``n + a`` is ``absorbing[a]``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

ROW_SUM_TOL = 1e-9
RENORM_FLOOR = 1e-13  # smaller drift is summation noise; rescaling would only perturb the last bits
DOMINATION_TOL = 1e-12

StateSet = tuple  # sorted, duplicate-free tuple of 1-based transient indices


def state_set(states: Iterable[int], n: int) -> tuple[int, ...]:
    """Normalise ``states`` into a sorted duplicate-free tuple within ``1..n``."""
    out = sorted({int(z) for z in states})
    for z in out:
        if not 1 <= z <= n:
            raise ValueError(f"state {z} outside 1..{n}")
    return tuple(out)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _freeze_csr(m, shape):
    m = sp.csr_matrix(m, shape=shape, dtype=float)
    m.sum_duplicates()
    m.sort_indices()
    m.data.flags.writeable = False
    return m


@dataclass(frozen=True, eq=False)
class ChainSpec:
    n_transient: int
    absorbing: tuple[str, ...]
    sigma_index: int
    pi: np.ndarray
    q: sp.csr_matrix
    q_bar: sp.csr_matrix
    state_labels: tuple[str, ...] | None = None
    renormalized: tuple[tuple[str, int], ...] = field(default=())

    def __post_init__(self):
        n = int(self.n_transient)
        if n < 1:
            raise ValueError("need at least one transient state")
        absorbing = tuple(str(a) for a in self.absorbing)
        if len(set(absorbing)) != len(absorbing):
            raise ValueError("absorbing labels must be unique")
        if not 0 <= self.sigma_index < len(absorbing):
            raise ValueError("sigma_index out of range")
        shape = (n, n + len(absorbing))
        object.__setattr__(self, "n_transient", n)
        object.__setattr__(self, "absorbing", absorbing)
        object.__setattr__(self, "q", _freeze_csr(self.q, shape))
        object.__setattr__(self, "q_bar", _freeze_csr(self.q_bar, shape))
        pi = _readonly(self.pi)
        if pi.shape != (n,):
            raise ValueError(f"pi must have length {n}")
        object.__setattr__(self, "pi", pi)
        if self.state_labels is not None:
            labels = tuple(str(s) for s in self.state_labels)
            if len(labels) != n:
                raise ValueError("state_labels must have one entry per transient state")
            object.__setattr__(self, "state_labels", labels)

    @property
    def n(self) -> int:
        return self.n_transient

    @property
    def sigma(self) -> str:
        return self.absorbing[self.sigma_index]

    @property
    def sigma_column(self) -> int:
        return self.n_transient + self.sigma_index

    def column_label(self, col: int):
        """Transient columns map to 1-based ints, absorbing ones to labels."""
        if col < self.n_transient:
            return col + 1
        return self.absorbing[col - self.n_transient]

    def column_index(self, key) -> int:
        if isinstance(key, str):
            try:
                return self.n_transient + self.absorbing.index(key)
            except ValueError:
                raise KeyError(f"unknown absorbing label {key!r}") from None
        j = int(key)
        if not 1 <= j <= self.n_transient:
            raise KeyError(f"transient index {j} outside 1..{self.n_transient}")
        return j - 1

    def row(self, table: str, i: int) -> dict:
        """Row ``i`` (1-based) of ``'q'`` or ``'q_bar'`` as ``{column key: prob}``."""
        m = self.q if table == "q" else self.q_bar
        lo, hi = m.indptr[i - 1], m.indptr[i]
        return {self.column_label(c): float(v) for c, v in zip(m.indices[lo:hi], m.data[lo:hi])}

    @classmethod
    def from_rows(
        cls,
        n_transient: int,
        absorbing: Iterable[str],
        sigma,
        pi,
        q: Mapping[int, Mapping],
        q_bar: Mapping[int, Mapping],
        state_labels=None,
        renormalize: bool = True,
    ) -> "ChainSpec":
        """Build a chain from ``{row: {column: prob}}`` dictionaries.

        Row keys are 1-based transient indices; column keys are either
        1-based transient indices or absorbing labels. ``sigma`` is the
        target's label or its position in ``absorbing``. ``pi`` is a
        sequence of length ``n`` or a ``{state: prob}`` mapping.

        Rows whose sum is off by more than ``RENORM_FLOOR`` but within
        ``ROW_SUM_TOL`` are rescaled when ``renormalize`` is set, and recorded.
        """
        absorbing = tuple(absorbing)
        sigma_index = absorbing.index(sigma) if isinstance(sigma, str) else int(sigma)
        n = int(n_transient)
        if isinstance(pi, Mapping):
            vec = np.zeros(n)
            for i, p in pi.items():
                vec[int(i) - 1] += float(p)
            pi = vec

        def col(key):
            if isinstance(key, str):
                return n + absorbing.index(key)
            return int(key) - 1

        renormalized = []
        tables = []
        for name, rows in (("q", q), ("q_bar", q_bar)):
            r_idx, c_idx, vals = [], [], []
            for i, row in rows.items():
                items = [(col(k), float(v)) for k, v in row.items()]
                total = sum(v for _, v in items)
                if renormalize and RENORM_FLOOR < abs(total - 1.0) <= ROW_SUM_TOL:
                    items = [(c, v / total) for c, v in items]
                    renormalized.append((name, int(i)))
                for c, v in items:
                    r_idx.append(int(i) - 1)
                    c_idx.append(c)
                    vals.append(v)
            tables.append(sp.csr_matrix((vals, (r_idx, c_idx)), shape=(n, n + len(absorbing))))
        return cls(
            n_transient=n,
            absorbing=absorbing,
            sigma_index=sigma_index,
            pi=pi,
            q=tables[0],
            q_bar=tables[1],
            state_labels=state_labels,
            renormalized=tuple(renormalized),
        )


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    where: tuple = ()


@dataclass
class ValidationReport:
    """Invariant violations found in a chain.

    The report is empty (``ok``) iff the chain is well formed. Rows that were
    rescaled at load time are listed in ``renormalized``; they are notes, not
    violations.
    """

    violations: list[Violation] = field(default_factory=list)
    renormalized: list[tuple[str, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def add(self, kind, message, *where):
        self.violations.append(Violation(kind, message, tuple(where)))

    def __str__(self):
        if self.ok:
            lines = ["chain is well formed"]
        else:
            lines = [f"{len(self.violations)} violation(s):"]
            lines += [f"  [{v.kind}] {v.message}" for v in self.violations]
        for table, i in self.renormalized:
            lines.append(f"  note: row {i} of {table} renormalized at load")
        return "\n".join(lines)


def _row_sums(m):
    return np.asarray(m.sum(axis=1)).ravel()


def unreachable_states(table: sp.csr_matrix, n: int) -> list[int]:
    """0-based transient states with no positive path to an absorbing column."""
    pos = table.copy()
    pos.data = (pos.data > 0).astype(float)
    pos.eliminate_zeros()
    exits = np.asarray(pos[:, n:].sum(axis=1)).ravel() > 0
    back = pos[:, :n].T.tocsr()  # j -> i whenever i -> j
    seen = exits.copy()
    todo = deque(np.flatnonzero(exits))
    while todo:
        j = todo.popleft()
        for i in back.indices[back.indptr[j]:back.indptr[j + 1]]:
            if not seen[i]:
                seen[i] = True
                todo.append(i)
    return [int(i) for i in np.flatnonzero(~seen)]


def validate_chain(spec: ChainSpec) -> ValidationReport:
    report = ValidationReport(renormalized=list(spec.renormalized))
    n = spec.n_transient
    sig = spec.sigma_column

    for name in ("q", "q_bar"):
        m = getattr(spec, name)
        if (m.data < 0).any():
            coo = m.tocoo()
            for i, j in zip(coo.row[coo.data < 0], coo.col[coo.data < 0]):
                report.add("negative", f"negative probability in {name}[{i + 1},{spec.column_label(j)}]",
                           name, int(i) + 1, spec.column_label(j))
        sums = _row_sums(m)
        for i in np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL):
            report.add("row_sum", f"row {i + 1} of {name} sums to {sums[i]!r}", name, int(i) + 1)

    sig_col = spec.q_bar[:, sig].toarray().ravel()
    for i in np.flatnonzero(sig_col != 0):
        report.add("sigma_in_q_bar",
                   f"absorbing-column nonzero in q_bar: q_bar[{i + 1},{spec.sigma}]={sig_col[i]!r}",
                   int(i) + 1)

    # selected rows may only shift mass towards the target
    diff = (spec.q - spec.q_bar).tocoo()
    bad = (diff.data > DOMINATION_TOL) & (diff.col != sig)
    for i, j in zip(diff.row[bad], diff.col[bad]):
        key = spec.column_label(j)
        report.add("domination",
                   f"q[{i + 1},{key}]={spec.q[i, j]!r} exceeds q_bar[{i + 1},{key}]={spec.q_bar[i, j]!r}",
                   int(i) + 1, key)

    pi = spec.pi
    if (pi < 0).any():
        report.add("pi_negative", f"pi has negative entries at {list(np.flatnonzero(pi < 0) + 1)}")
    if abs(pi.sum() - 1.0) > ROW_SUM_TOL:
        report.add("pi_sum", f"pi sums to {pi.sum()!r}")

    for name in ("q_bar", "q"):
        lost = unreachable_states(getattr(spec, name), n)
        if lost:
            shown = [i + 1 for i in lost[:10]]
            report.add("unreachable",
                       f"under {name}, states {shown}{'...' if len(lost) > 10 else ''} cannot reach any absorbing state",
                       name, *[i + 1 for i in lost])
    return report


@dataclass(frozen=True, eq=False)
class AssembledChain:
    """Transient block ``A``, target column ``b`` and other absorbers for one selection."""

    selection: tuple[int, ...]
    A: sp.csr_matrix
    b: np.ndarray
    b_other: np.ndarray


def selection_mask(n: int, s) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    if len(s):
        mask[np.asarray(s, dtype=int) - 1] = True
    return mask


def assemble(spec: ChainSpec, s) -> AssembledChain:
    s = state_set(s, spec.n_transient)
    n = spec.n_transient
    mask = selection_mask(n, s).astype(float)
    rows = sp.diags(mask) @ spec.q + sp.diags(1.0 - mask) @ spec.q_bar
    rows = sp.csr_matrix(rows)
    rows.eliminate_zeros()
    rows.sort_indices()
    absorbing = rows[:, n:].toarray()
    b = absorbing[:, spec.sigma_index].copy()
    b_other = np.delete(absorbing, spec.sigma_index, axis=1)
    for arr in (b, b_other):
        arr.flags.writeable = False
    return AssembledChain(selection=s, A=sp.csr_matrix(rows[:, :n]), b=b, b_other=b_other)
