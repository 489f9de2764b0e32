"""File formats: embedding and score CSVs, the MVDM distance format, manifests.

Reals are written with 17 significant digits, which round-trips every
float64 exactly, and always with ``.`` as the decimal mark.

MVDM binary layout::

    b"MVDM" | n: u64 little-endian | flag: u8 (1 = symmetrized) | n*n f64 little-endian, row-major
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .embedders import EmbedderConfig
from .errors import (
    DuplicateName,
    InconsistentColumnCount,
    ParseError,
    ValidationError,
    WriteError,
)
from .geometry import full_distance_matrix
from .model import CandidateSet, EigenscoreMatrix, Embedding, MetaDistance

MAGIC = b"MVDM"
_HEADER = struct.Struct("<4sQB")
FORMATS = ("csv", "distance")
KINDS = ("clusters", "manifold")


def _fmt(x: float) -> str:
    return "%.17g" % x


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_csv_matrix(path, allow_header: bool = True):
    """Parse a comma-separated real matrix; returns ``(header or None, array)``.

    A first line with any non-numeric field is taken as a header. Blank
    lines and ``#`` comment lines are skipped.
    """
    header = None
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [f.strip() for f in text.split(",")]
            if header is None and not rows and allow_header and not all(_is_number(f) for f in fields):
                header = fields
                width = len(fields)
                continue
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise InconsistentColumnCount(f"expected {width} fields, found {len(fields)}", line=lineno)
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                bad = next(f for f in fields if not _is_number(f))
                raise ParseError(f"not a number: {bad!r}", line=lineno) from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return header, np.array(rows, dtype=np.float64)


def _write_text(path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def _csv_text(header, X) -> str:
    lines = [",".join(header)] if header is not None else []
    lines.extend(",".join(_fmt(v) for v in row) for row in np.atleast_2d(X))
    return "\n".join(lines) + "\n"


def load_embedding(path, format: str = "csv", name: Optional[str] = None) -> Embedding:
    if format != "csv":
        raise ValidationError(f"embeddings are stored as csv, not {format!r}")
    _, X = read_csv_matrix(path)
    return Embedding(name or os.path.splitext(os.path.basename(path))[0], X)


def save_embedding(e: Embedding, path, header: bool = True):
    cols = [f"x{j + 1}" for j in range(e.d)] if header else None
    _write_text(path, _csv_text(cols, e.coords))


def save_scores(scores, candidate_names, path):
    """Write an n x K eigenscore table with the candidate names as header."""
    S = scores.scores if isinstance(scores, EigenscoreMatrix) else np.asarray(scores, dtype=np.float64)
    names = list(candidate_names)
    if S.ndim != 2 or S.shape[1] != len(names):
        raise ValidationError(f"{len(names)} names for a score table of shape {S.shape}")
    _write_text(path, _csv_text(names, S))


def load_scores(path):
    """Return ``(names, scores)``."""
    header, S = read_csv_matrix(path)
    if header is None:
        header = [f"c{k}" for k in range(S.shape[1])]
    return header, S


def save_distance(m, path, binary: Optional[bool] = None):
    """Write a (meta-)distance matrix; format follows the extension unless ``binary`` is given."""
    rows = m.rows if isinstance(m, MetaDistance) else np.asarray(m, dtype=np.float64)
    sym = bool(getattr(m, "symmetrized", False))
    n = rows.shape[0]
    if rows.shape != (n, n):
        raise ValidationError(f"distance matrix must be square, got {rows.shape}")
    if binary is None:
        binary = not str(path).lower().endswith(".csv")
    if not binary:
        _write_text(path, f"# mvdm symmetrized={int(sym)}\n" + _csv_text(None, rows))
        return
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, n, int(sym)))
            fh.write(np.ascontiguousarray(rows, dtype="<f8").tobytes())
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def load_distance(path) -> MetaDistance:
    rows, sym = load_distance_array(path)
    rows.setflags(write=False)
    return MetaDistance(rows, sym)


def load_distance_array(path):
    """Read a distance file without validating its entries; returns ``(rows, symmetrized)``.

    Candidate files written by the simulation model may hold negative
    entries, which a :class:`MetaDistance` rejects.
    """
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if head[:4] != MAGIC:
            if str(path).lower().endswith(".csv"):
                return _load_distance_csv(path)
            raise ParseError(f"{path}: bad magic {head[:4]!r}, expected {MAGIC!r}")
        if len(head) < _HEADER.size:
            raise ParseError(f"{path}: truncated header")
        _, n, flag = _HEADER.unpack(head)
        if flag not in (0, 1):
            raise ParseError(f"{path}: invalid symmetrized flag {flag}")
        body = fh.read()
    if len(body) != 8 * n * n:
        raise ParseError(f"{path}: expected {8 * n * n} data bytes for n={n}, found {len(body)}")
    rows = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, n)
    return rows, bool(flag)


def _load_distance_csv(path):
    sym = False
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first.startswith("# mvdm"):
        sym = "symmetrized=1" in first
    _, rows = read_csv_matrix(path, allow_header=False)
    if rows.shape[0] != rows.shape[1]:
        raise ParseError(f"{path}: distance matrix is {rows.shape[0]} x {rows.shape[1]}")
    return rows, sym


def save_labels(labels, path, header: str = "label"):
    _write_text(path, header + "\n" + "\n".join(str(int(v)) for v in labels) + "\n")


def load_labels(path) -> np.ndarray:
    _, X = read_csv_matrix(path)
    if X.shape[1] != 1:
        raise InconsistentColumnCount(f"{path}: labels file needs one column")
    v = X[:, 0]
    if not np.all(v == np.round(v)):
        raise ParseError(f"{path}: labels must be integers")
    return v.astype(np.int64)


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    path: str
    format: str = "csv"


@dataclass(frozen=True)
class Manifest:
    candidates: tuple
    n: Optional[int] = None
    kind: Optional[str] = None  # "clusters" or "manifold": selects the pipeline embedder
    base_dir: str = "."

    def resolve(self, entry: ManifestEntry) -> str:
        return entry.path if os.path.isabs(entry.path) else os.path.join(self.base_dir, entry.path)


def load_manifest(path) -> Manifest:
    """Read a JSON manifest; candidate paths are relative to the manifest's directory."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", line=exc.lineno) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("candidates"), list) or not doc["candidates"]:
        raise ParseError(f"{path}: manifest needs a non-empty 'candidates' list")
    entries = []
    for j, c in enumerate(doc["candidates"]):
        if not isinstance(c, dict) or "path" not in c:
            raise ParseError(f"{path}: candidate {j} needs a 'path'")
        fmt = c.get("format", "csv")
        if fmt not in FORMATS:
            raise ParseError(f"{path}: candidate {j} has unknown format {fmt!r}")
        name = c.get("name") or os.path.splitext(os.path.basename(c["path"]))[0]
        entries.append(ManifestEntry(str(name), str(c["path"]), fmt))
    names = [e.name for e in entries]
    dup = sorted({x for x in names if names.count(x) > 1})
    if dup:
        raise DuplicateName(f"duplicate candidate names in manifest: {dup}")
    kind = doc.get("kind")
    if kind is not None and kind not in KINDS:
        raise ParseError(f"{path}: kind must be one of {KINDS}")
    base = os.path.dirname(os.path.abspath(path))
    m = Manifest(tuple(entries), doc.get("n"), kind, base)
    missing = [m.resolve(e) for e in entries if not os.path.exists(m.resolve(e))]
    if missing:
        raise FileNotFoundError(f"manifest references missing files: {missing}")
    return m


def save_manifest(path, entries, n: Optional[int] = None, kind: Optional[str] = None):
    doc = {"candidates": [{"name": e.name, "path": e.path, "format": e.format} for e in entries]}
    if n is not None:
        doc["n"] = int(n)
    if kind is not None:
        doc["kind"] = kind
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def load_candidates(manifest: Manifest):
    """Load every candidate of a manifest.

    Returns a :class:`CandidateSet` when all entries are coordinate CSVs,
    otherwise a ``(names, matrices)`` pair of n x n distance matrices, with
    coordinate candidates converted to their Euclidean distances.
    """
    items = []
    for e in manifest.candidates:
        p = manifest.resolve(e)
        if e.format == "csv":
            items.append(load_embedding(p, name=e.name))
        else:
            items.append(load_distance_array(p)[0])
    if all(isinstance(x, Embedding) for x in items):
        cs = CandidateSet(tuple(items))
        _check_n(manifest, cs.n)
        return cs
    mats = [full_distance_matrix(x) if isinstance(x, Embedding) else x for x in items]
    sizes = {m.shape[0] for m in mats}
    if len(sizes) != 1:
        raise ValidationError(f"candidates disagree on sample count: {sorted(sizes)}")
    _check_n(manifest, sizes.pop())
    return [e.name for e in manifest.candidates], mats


def _check_n(manifest, n):
    if manifest.n is not None and manifest.n != n:
        raise ValidationError(f"manifest declares n={manifest.n} but candidates have n={n}")


@dataclass(frozen=True)
class RunConfig:
    threads: int = 0
    seed: int = 0
    output_dir: str = "."
    symmetrize: bool = True
    embed: EmbedderConfig = field(default_factory=EmbedderConfig)
    clamp: bool = False

    def __post_init__(self):
        if self.threads < 0:
            raise ValidationError("threads must be >= 0")
