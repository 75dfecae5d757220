"""Reading and writing Hamiltonian description files.

A file is a JSON document::

    {"format_version": "1.0",
     "kind": "product",                 # or "sum" or "boxplus"
     "factors": [A, B],                 # kind == "product"
     "terms": [[A1, B1], [A2, B2]],     # kind == "sum"
     "parts": [[A1, B1], [A2, B2]],     # kind == "boxplus"
     "labels": ["optional", "names"]}

Each matrix is a list of rows, each entry an ``[re, im]`` pair.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hamiltonians import BipartiteHamiltonian, ProductHamiltonian, boxplus

FORMAT_VERSION = "1.0"
KINDS = ("product", "sum", "boxplus")


@dataclass(frozen=True, eq=False)
class HamiltonianFile:
    kind: str
    hamiltonian: object
    terms: tuple
    labels: tuple
    path: str = ""
    sha256: str = ""

    def product(self) -> ProductHamiltonian | None:
        """The Hamiltonian as a single product, if it is one."""
        if isinstance(self.hamiltonian, ProductHamiltonian):
            return self.hamiltonian
        if self.kind == "sum" and len(self.terms) == 1:
            return self.terms[0]
        return None


def decode_matrix(obj, name: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ValidationError(f"{name}: expected a non-empty list of rows")
    n = len(obj)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(obj):
        if len(row) != n:
            raise ValidationError(f"{name}: matrix must be square ({n} rows, row {i} has {len(row)} entries)")
        for j, entry in enumerate(row):
            if (not isinstance(entry, list) or len(entry) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)):
                raise ValidationError(f"{name}[{i}][{j}]: expected an [re, im] pair of numbers")
            out[i, j] = complex(entry[0], entry[1])
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name}: non-finite entries")
    return out


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _pair(obj, name: str) -> ProductHamiltonian:
    if not isinstance(obj, list) or len(obj) != 2:
        raise ValidationError(f"{name}: expected a pair [A, B]")
    try:
        return ProductHamiltonian(decode_matrix(obj[0], f"{name}.A"), decode_matrix(obj[1], f"{name}.B"))
    except ValidationError as exc:
        raise ValidationError(f"{name}: {exc}") from None


def parse_hamiltonian(doc, path: str = "", sha256: str = "") -> HamiltonianFile:
    if not isinstance(doc, dict):
        raise ValidationError("top level must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported or missing format_version {version!r} (expected {FORMAT_VERSION!r})")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}, got {kind!r}")
    key = {"product": "factors", "sum": "terms", "boxplus": "parts"}[kind]
    if key not in doc:
        raise ValidationError(f"kind {kind!r} requires a {key!r} field")
    if kind == "product":
        terms = (_pair(doc["factors"], "factors"),)
    else:
        items = doc[key]
        if not isinstance(items, list) or not items:
            raise ValidationError(f"{key} must be a non-empty list")
        terms = tuple(_pair(item, f"{key}[{i}]") for i, item in enumerate(items))
    labels = doc.get("labels", [])
    if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
        raise ValidationError("labels must be a list of strings")
    if kind == "product":
        h = terms[0]
    elif kind == "sum":
        h = BipartiteHamiltonian(terms)
    else:
        h = reduce(boxplus, terms)
    return HamiltonianFile(kind, h, terms, tuple(labels), path, sha256)


def load_hamiltonian(path) -> HamiltonianFile:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {p}: {exc.strerror}") from None
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ValidationError(f"{p}: not valid JSON ({exc})") from None
    return parse_hamiltonian(doc, str(p), hashlib.sha256(raw).hexdigest())


def hamiltonian_document(h, kind: str | None = None, labels=()) -> dict:
    """JSON-ready document for a product, a list of terms, or a list of boxplus parts."""
    if isinstance(h, ProductHamiltonian) and kind in (None, "product"):
        doc = {"kind": "product", "factors": [encode_matrix(h.a), encode_matrix(h.b)]}
    elif kind == "boxplus":
        doc = {"kind": "boxplus", "parts": [[encode_matrix(t.a), encode_matrix(t.b)] for t in h]}
    else:
        terms = h.terms if isinstance(h, BipartiteHamiltonian) else list(h)
        doc = {"kind": "sum", "terms": [[encode_matrix(t.a), encode_matrix(t.b)] for t in terms]}
    doc = {"format_version": FORMAT_VERSION, **doc}
    if labels:
        doc["labels"] = list(labels)
    return doc


def dump_hamiltonian(h, path, kind: str | None = None, labels=()) -> None:
    Path(path).write_text(json.dumps(hamiltonian_document(h, kind, labels), indent=1) + "\n")


__all__ = [
    "FORMAT_VERSION",
    "HamiltonianFile",
    "decode_matrix",
    "dump_hamiltonian",
    "encode_matrix",
    "hamiltonian_document",
    "load_hamiltonian",
    "parse_hamiltonian",
]
