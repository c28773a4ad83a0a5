"""Sparse multi-label text format and synthetic data.

File layout (UTF-8, LF line endings)::

    #n <n> #d <d> #q <q>
    #labels <name_1> ... <name_q>        (optional)
    <l1,l2,...> <idx:val> <idx:val> ...

Label and feature indices are 1-based. The label field may be empty, in
which case the line starts with a space. Other lines starting with ``#`` are
comments.
"""

from __future__ import annotations

import re

import numpy as np
from scipy import sparse

from .core import CCMNError, MultiLabelDataset, make_rng

HEADER_RE = re.compile(r"^#n\s+(\d+)\s+#d\s+(\d+)\s+#q\s+(\d+)\s*$")
INT_RE = re.compile(r"^[0-9]+$")
FLOAT_RE = re.compile(r"^[+-]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?$")


class ParseError(CCMNError, ValueError):
    def __init__(self, msg, lineno=None, path=None):
        self.lineno = lineno
        where = ""
        if path is not None:
            where += "%s:" % path
        if lineno is not None:
            where += "%d:" % lineno
        super().__init__((where + " " if where else "") + msg)


class RangeError(ParseError):
    pass


class GenerationFailed(CCMNError, RuntimeError):
    pass


def _index(tok, upper, what, lineno, path):
    if not INT_RE.match(tok):
        raise ParseError("bad %s index %r" % (what, tok), lineno, path)
    i = int(tok)
    if not 1 <= i <= upper:
        raise RangeError("%s index %d outside [1, %d]" % (what, i, upper), lineno, path)
    return i - 1


def parse_lines(lines, path=None):
    header = None
    names = None
    label_rows = []
    rows, cols, vals = [], [], []
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if line.endswith("\r"):
            raise ParseError("CR line endings are not allowed", lineno, path)
        if line.startswith("#"):
            m = HEADER_RE.match(line)
            if m:
                if header is not None:
                    raise ParseError("duplicate header", lineno, path)
                header = tuple(int(g) for g in m.groups())
            elif line.startswith("#labels"):
                if header is None or names is not None or label_rows:
                    raise ParseError("#labels must follow the header directly", lineno, path)
                names = line.split()[1:]
                if len(names) != header[2]:
                    raise ParseError("expected %d label names" % header[2], lineno, path)
            elif line.startswith(("#n", "#d", "#q")):
                raise ParseError("malformed header %r" % line, lineno, path)
            continue
        if header is None:
            raise ParseError("missing '#n <n> #d <d> #q <q>' header", lineno, path)
        if line == "":
            if lineno == len(lines):
                continue
            raise ParseError("blank line (an instance line holds at least a space)", lineno, path)
        n, d, q = header
        label_field, _, rest = line.partition(" ")
        y = -np.ones(q, dtype=np.int8)
        if label_field:
            for tok in label_field.split(","):
                j = _index(tok, q, "label", lineno, path)
                if y[j] == 1:
                    raise ParseError("duplicate label %s" % tok, lineno, path)
                y[j] = 1
        r = len(label_rows)
        seen = set()
        for tok in rest.split(" ") if rest else ():
            idx, sep, val = tok.partition(":")
            if not sep or not FLOAT_RE.match(val):
                raise ParseError("bad feature token %r" % tok, lineno, path)
            i = _index(idx, d, "feature", lineno, path)
            if i in seen:
                raise ParseError("duplicate feature index %s" % idx, lineno, path)
            seen.add(i)
            v = float(val)
            if not np.isfinite(v):
                raise ParseError("non-finite feature value %r" % val, lineno, path)
            rows.append(r)
            cols.append(i)
            vals.append(v)
        label_rows.append(y)
    if header is None:
        raise ParseError("missing '#n <n> #d <d> #q <q>' header", None, path)
    n, d, q = header
    if len(label_rows) != n:
        raise ParseError("header declares %d instances, found %d" % (n, len(label_rows)), None, path)
    X = sparse.csr_matrix((vals, (rows, cols)), shape=(n, d), dtype=np.float64)
    Y = np.array(label_rows, dtype=np.int8).reshape(n, q)
    return MultiLabelDataset(X, Y, names)


def parse_multilabel_svm(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError("cannot read %s: %s" % (path, exc)) from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("not valid UTF-8 (%s)" % exc.reason, None, path) from None
    return parse_lines(text.split("\n"), path)


def format_dataset(data):
    X = sparse.csr_matrix(data.features, dtype=np.float64)
    X.sort_indices()
    out = ["#n %d #d %d #q %d" % (data.n, data.d, data.q)]
    if data.names is not None:
        if any(not s or any(c.isspace() for c in s) for s in data.names):
            raise ValueError("label names must be non-empty and contain no whitespace")
        out.append("#labels " + " ".join(data.names))
    for r in range(data.n):
        labels = ",".join(str(j + 1) for j in np.flatnonzero(data.labels[r] > 0))
        lo, hi = X.indptr[r], X.indptr[r + 1]
        feats = " ".join(
            "%d:%.17g" % (i + 1, v) for i, v in zip(X.indices[lo:hi], X.data[lo:hi]) if v != 0.0
        )
        out.append(labels + " " + feats if feats else labels + " ")
    return "\n".join(out) + "\n"


def write_multilabel_svm(data, path):
    text = format_dataset(data)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError("cannot write %s: %s" % (path, exc)) from exc


def generate_synthetic(n, d, q, margin=0.0, seed=0, max_draws=None):
    """Points uniform in the unit d-ball labelled by q random hyperplanes through 0.

    Points within ``margin`` of any hyperplane, and points with no positive
    label, are redrawn. The unit normals are kept in ``metadata['hyperplanes']``
    so ``sign(X @ W.T)`` reproduces the labels exactly.
    """
    if min(n, d, q) < 1 or margin < 0:
        raise ValueError("need n, d, q >= 1 and margin >= 0")
    rng = make_rng(seed, "synthetic")
    W = rng.standard_normal((q, d))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    budget = max_draws if max_draws is not None else 1000 * n + 10000
    kept = []
    drawn = 0
    have = 0
    while have < n:
        if drawn >= budget:
            raise GenerationFailed(
                "kept %d of %d instances after %d draws; margin %g too large" % (have, n, drawn, margin)
            )
        m = min(max(2 * (n - have), 256), budget - drawn)
        Z = rng.standard_normal((m, d))
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        Z *= rng.random((m, 1)) ** (1.0 / d)
        drawn += m
        S = Z @ W.T
        ok = np.all(np.abs(S) >= margin, axis=1) & np.any(S >= 0, axis=1)
        kept.append((Z[ok], S[ok]))
        have += int(ok.sum())
    X = np.concatenate([z for z, _ in kept])[:n]
    Y = np.where(np.concatenate([s for _, s in kept])[:n] >= 0, 1, -1).astype(np.int8)
    return MultiLabelDataset(X, Y, metadata={"hyperplanes": W, "margin": margin, "seed": seed})
