"""Text formats: CHAIN v1, the bipartite tag dataset, edge lists and sweep CSV.

CHAIN v1::

    CHAIN v1
    n_transient 2
    absorbing null *sigma
    PI
    1 1
    QBAR
    1 2 0.5
    1 null 0.5
    ...
    Q
    1 sigma 1

The target absorber is marked with ``*``. Entries are ``<row> <col> <p>``
with ``col`` a 1-based transient index or an absorbing label; zero entries
are omitted. ``#`` starts a comment. Rows that miss one by more than
``ROW_SUM_TOL`` are rejected; smaller drift is renormalized and recorded.

Bipartite datasets hold directive lines (``EPSILON``, ``SIGMA_WEIGHT``,
``CANDIDATES``, ``TRUE_TAGS``) and tab-separated ``item tag weight`` rows.
"""

from __future__ import annotations

import csv
import io
import math
import os
from pathlib import Path

from .chain import ROW_SUM_TOL, ChainSpec, validate_chain
from .errors import ChainValidationError, DuplicateEdge, ParseError
from .tags import TagGraph

CHAIN_MAGIC = "CHAIN v1"
CSV_HEADER = ("method", "k", "f", "wall_time_ms", "n_evals")
DIRECTIVES = ("EPSILON", "SIGMA_WEIGHT", "CANDIDATES", "TRUE_TAGS")


def fmt(x: float) -> str:
    return "%.17g" % x


def _content_lines(text: str):
    """``(line number, stripped content)`` with comments and blanks removed."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _is_int(tok: str) -> bool:
    return tok.lstrip("+-").isdigit()


def _float(tok, no, path, what="probability"):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"malformed {what} {tok!r}", no, path) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite {what} {tok!r}", no, path)
    return v


# --- CHAIN v1 ---------------------------------------------------------------

def parse_chain(text: str, path=None, validate: bool = True) -> ChainSpec:
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != CHAIN_MAGIC:
        raise ParseError(f"expected header {CHAIN_MAGIC!r}", lines[0][0] if lines else 1, path)
    if len(lines) < 3:
        raise ParseError("truncated header", lines[-1][0], path)

    no, line = lines[1]
    tok = line.split()
    if len(tok) != 2 or tok[0] != "n_transient" or not tok[1].isdigit() or int(tok[1]) < 1:
        raise ParseError("expected 'n_transient <n>' with n >= 1", no, path)
    n = int(tok[1])

    no, line = lines[2]
    tok = line.split()
    if tok[0] != "absorbing" or len(tok) < 2:
        raise ParseError("expected 'absorbing <label>...'", no, path)
    labels, sigma = [], None
    for t in tok[1:]:
        if t.startswith("*"):
            if sigma is not None:
                raise ParseError("more than one absorbing label marked '*'", no, path)
            t = t[1:]
            sigma = len(labels)
        if not t or _is_int(t) or t in labels:
            raise ParseError(f"bad absorbing label {t!r}", no, path)
        labels.append(t)
    if sigma is None:
        raise ParseError("no absorbing label marked '*' as the target", no, path)

    sections: dict[str, dict] = {"PI": {}, "QBAR": {}, "Q": {}}
    first_line: dict[tuple, int] = {}
    current = None
    for no, line in lines[3:]:
        if line in sections:
            if first_line.get((line,)) is not None:
                raise ParseError(f"section {line} repeated", no, path)
            first_line[(line,)] = no
            current = line
            continue
        if current is None:
            raise ParseError(f"entry outside a section: {line!r}", no, path)
        tok = line.split()
        if current == "PI":
            if len(tok) != 2 or not _is_int(tok[0]):
                raise ParseError("expected '<state> <p>'", no, path)
            i = int(tok[0])
            if not 1 <= i <= n:
                raise ParseError(f"state {i} outside 1..{n}", no, path)
            if i in sections["PI"]:
                raise ParseError(f"duplicate PI entry for state {i}", no, path)
            sections["PI"][i] = _float(tok[1], no, path)
            continue
        if len(tok) != 3 or not _is_int(tok[0]):
            raise ParseError("expected '<row> <col> <p>'", no, path)
        i = int(tok[0])
        if not 1 <= i <= n:
            raise ParseError(f"row {i} outside 1..{n}", no, path)
        if _is_int(tok[1]):
            j = int(tok[1])
            if not 1 <= j <= n:
                raise ParseError(f"column {j} outside 1..{n}", no, path)
        elif tok[1] in labels:
            j = tok[1]
        else:
            raise ParseError(f"unknown column {tok[1]!r}", no, path)
        row = sections[current].setdefault(i, {})
        if j in row:
            raise ParseError(f"duplicate entry {current}[{i},{j}]", no, path)
        row[j] = _float(tok[2], no, path)
        first_line.setdefault((current, i), no)

    for name in ("PI", "QBAR", "Q"):
        if (name,) not in first_line:
            raise ParseError(f"missing {name} section", None, path)
    for name in ("QBAR", "Q"):
        for i in range(1, n + 1):
            row = sections[name].get(i)
            if not row:
                raise ParseError(f"{name} row {i} is missing", None, path)
            total = sum(row.values())
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise ParseError(f"{name} row {i} sums to {total!r}", first_line[(name, i)], path)

    spec = ChainSpec.from_rows(n, labels, sigma, sections["PI"], sections["Q"], sections["QBAR"])
    if validate:
        report = validate_chain(spec)
        if not report.ok:
            raise ChainValidationError(report)
    return spec


def parse_chain_file(path, validate: bool = True) -> ChainSpec:
    return parse_chain(Path(path).read_text(), path=str(path), validate=validate)


def format_chain(spec: ChainSpec) -> str:
    """Canonical CHAIN v1 text: rows ascending, transient columns before absorbers."""
    out = [CHAIN_MAGIC, f"n_transient {spec.n_transient}"]
    marks = ["*" + a if k == spec.sigma_index else a for k, a in enumerate(spec.absorbing)]
    out.append("absorbing " + " ".join(marks))
    out.append("PI")
    out += [f"{i + 1} {fmt(p)}" for i, p in enumerate(spec.pi) if p != 0]
    for name, m in (("QBAR", spec.q_bar), ("Q", spec.q)):
        out.append(name)
        for i in range(spec.n_transient):
            for j, v in zip(m.indices[m.indptr[i]:m.indptr[i + 1]], m.data[m.indptr[i]:m.indptr[i + 1]]):
                if v != 0:
                    out.append(f"{i + 1} {spec.column_label(j)} {fmt(v)}")
    return "\n".join(out) + "\n"


def write_chain_file(spec: ChainSpec, path) -> None:
    Path(path).write_text(format_chain(spec))


# --- bipartite datasets ------------------------------------------------------

def parse_bipartite(text: str, path=None) -> TagGraph:
    kwargs: dict = {}
    triples = []
    seen: dict[tuple[str, str], int] = {}
    for no, line in _content_lines(text):
        head = line.split(None, 1)
        if "\t" not in line and head[0] in DIRECTIVES:
            key = head[0]
            args = head[1].split() if len(head) > 1 else []
            if key.lower() in kwargs:
                raise ParseError(f"directive {key} repeated", no, path)
            if key in ("EPSILON", "SIGMA_WEIGHT"):
                if len(args) != 1:
                    raise ParseError(f"{key} takes one value", no, path)
                kwargs[key.lower()] = _float(args[0], no, path, key.lower())
            else:
                kwargs[key.lower()] = tuple(args)
            continue
        tok = line.split("\t") if "\t" in line else line.split()
        tok = [t.strip() for t in tok]
        if len(tok) != 3 or not tok[0] or not tok[1]:
            raise ParseError("expected '<item>\\t<tag>\\t<weight>'", no, path)
        w = _float(tok[2], no, path, "weight")
        if not w > 0:
            raise ParseError(f"weight must be positive, got {tok[2]!r}", no, path)
        edge = (tok[0], tok[1])
        if edge in seen:
            raise DuplicateEdge(f"duplicate edge {edge[0]!r}-{edge[1]!r} (first on line {seen[edge]})",
                                no, path)
        seen[edge] = no
        triples.append((tok[0], tok[1], w))
    if not triples:
        raise ParseError("no edges", None, path)
    if "candidates" in kwargs and not kwargs["candidates"]:
        raise ParseError("CANDIDATES lists no tags", None, path)
    return TagGraph.from_edges(triples, **kwargs)


def parse_bipartite_file(path) -> TagGraph:
    return parse_bipartite(Path(path).read_text(), path=str(path))


def format_bipartite(g: TagGraph) -> str:
    out = [f"EPSILON {fmt(g.epsilon)}", f"SIGMA_WEIGHT {fmt(g.sigma_weight)}"]
    if tuple(g.candidates) != tuple(g.tags):
        out.append("CANDIDATES " + " ".join(g.candidates))
    if g.true_tags:
        out.append("TRUE_TAGS " + " ".join(g.true_tags))
    for i, j, w in sorted(g.edges):
        out.append(f"{g.items[i]}\t{g.tags[j]}\t{fmt(w)}")
    return "\n".join(out) + "\n"


def write_bipartite_file(g: TagGraph, path) -> None:
    Path(path).write_text(format_bipartite(g))


# --- edge lists --------------------------------------------------------------

def parse_edge_list(text: str, path=None) -> list[tuple]:
    """``u v`` pairs; integer labels become ints."""
    edges = []
    for no, line in _content_lines(text):
        tok = line.split()
        if len(tok) != 2:
            raise ParseError("expected 'u v'", no, path)
        edges.append(tuple(int(t) if _is_int(t) else t for t in tok))
    return edges


def parse_edge_list_file(path) -> list[tuple]:
    return parse_edge_list(Path(path).read_text(), path=str(path))


# --- sweep CSV ---------------------------------------------------------------

def format_csv(rows, metadata: dict | None = None) -> str:
    """``# key=value`` metadata lines, then the fixed header and data rows."""
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([v if isinstance(v, (str, int)) else fmt(v) for v in r])
    return buf.getvalue()


def _count(tok: str):
    v = float(tok)
    return int(v) if v.is_integer() else v


def read_csv(path) -> tuple[dict, list[dict]]:
    """Metadata and rows of a sweep CSV; numeric fields are converted."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            else:
                body.append(line)
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ParseError(f"unexpected CSV header {reader.fieldnames}", None, str(path))
    rows = []
    for r in reader:
        try:
            rows.append({"method": r["method"], "k": int(r["k"]), "f": float(r["f"]),
                         "wall_time_ms": float(r["wall_time_ms"]), "n_evals": _count(r["n_evals"])})
        except ValueError:
            rows.append(dict(r))   # FAILED marker rows keep their raw text
    return meta, rows


def atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


__all__ = [
    "parse_chain", "parse_chain_file", "format_chain", "write_chain_file",
    "parse_bipartite", "parse_bipartite_file", "format_bipartite", "write_bipartite_file",
    "parse_edge_list", "parse_edge_list_file", "format_csv", "read_csv", "atomic_write",
]
