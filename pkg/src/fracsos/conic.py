"""Standard-form conic programs over free, nonnegative and PSD variables.

A program is  min/max c.x  subject to  A x = b  and x restricted to a product
cone: a block of free scalars, a block of nonnegative scalars, and a list of
PSD matrix blocks stored in scaled-vectorized (svec) form.  A VariableLayout
names the spans of x so that model-level quantities (moment vectors,
multipliers, matrix blocks) can be packed and unpacked without bookkeeping at
the call sites.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

SQRT2 = math.sqrt(2.0)


def svec_len(t: int) -> int:
    return t * (t + 1) // 2


def svec(M) -> np.ndarray:
    """Vectorize a symmetric matrix, scaling off-diagonals by sqrt(2).

    The scaling makes the Frobenius inner product a plain dot product:
    <M, N> == svec(M) @ svec(N).  Entries are ordered row-major over the
    upper triangle: (0,0), (0,1), ..., (0,t-1), (1,1), ...
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    i, j = np.triu_indices(M.shape[0])
    return M[i, j] * np.where(i != j, SQRT2, 1.0)


def smat(v) -> np.ndarray:
    """Invert svec exactly."""
    v = np.asarray(v, dtype=float)
    t = int((math.isqrt(8 * v.size + 1) - 1) // 2)
    if svec_len(t) != v.size:
        raise ValueError(f"length {v.size} is not a triangular number")
    M = np.zeros((t, t))
    i, j = np.triu_indices(t)
    vals = np.where(i != j, v / SQRT2, v)
    M[i, j] = vals
    M[j, i] = vals
    return M


@dataclass(frozen=True)
class Span:
    """A named contiguous slice of the variable vector."""

    name: str
    kind: str  # "free" | "nonneg" | "psd"
    offset: int
    length: int
    dim: int = 0  # matrix order for psd spans


@dataclass(frozen=True)
class VariableLayout:
    spans: tuple[Span, ...]

    def __post_init__(self):
        off = 0
        for sp in self.spans:
            if sp.offset != off:
                raise ValueError(f"span {sp.name!r} not contiguous at {off}")
            off += sp.length
        names = [sp.name for sp in self.spans]
        if len(set(names)) != len(names):
            raise ValueError("duplicate span names")

    @property
    def size(self) -> int:
        return sum(sp.length for sp in self.spans)

    def span(self, name: str) -> Span:
        for sp in self.spans:
            if sp.name == name:
                return sp
        raise KeyError(name)

    def names(self) -> list[str]:
        return [sp.name for sp in self.spans]

    def get(self, x: np.ndarray, name: str):
        """Slice out a span; psd spans come back as symmetric matrices."""
        sp = self.span(name)
        seg = np.asarray(x, dtype=float)[sp.offset:sp.offset + sp.length]
        return smat(seg) if sp.kind == "psd" else seg.copy()

    def pack(self, values: dict) -> np.ndarray:
        """Assemble a full variable vector from span values (missing -> 0)."""
        x = np.zeros(self.size)
        for name, val in values.items():
            sp = self.span(name)
            seg = svec(val) if sp.kind == "psd" else np.atleast_1d(np.asarray(val, dtype=float))
            if seg.size != sp.length:
                raise ValueError(f"span {name!r} expects length {sp.length}, got {seg.size}")
            x[sp.offset:sp.offset + sp.length] = seg
        return x

    def unpack(self, x: np.ndarray) -> dict:
        return {sp.name: self.get(x, sp.name) for sp in self.spans}


@dataclass
class ConicProgram:
    """min/max c.x  s.t.  A x = b,  x in free x nonneg x PSD-blocks."""

    sense: str
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    n_free: int
    n_nonneg: int
    psd_dims: tuple[int, ...]
    layout: VariableLayout
    row_labels: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.c.size)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.shape[0] != self.b.size:
            raise ValueError("A and b disagree on the number of equality rows")
        n = self.n_free + self.n_nonneg + sum(svec_len(t) for t in self.psd_dims)
        if n != self.c.size or n != self.layout.size:
            raise ValueError("cone structure, objective and layout disagree on dimension")
        # every coordinate belongs to exactly one cone segment, in order
        off = 0
        kinds = (("free", self.n_free), ("nonneg", self.n_nonneg))
        for kind, length in kinds:
            for sp in self.layout.spans:
                if sp.offset >= off and sp.offset < off + length and sp.kind != kind:
                    raise ValueError(f"span {sp.name!r} crosses the {kind} segment")
            off += length
        for t in self.psd_dims:
            off += svec_len(t)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def c_min(self) -> np.ndarray:
        """Objective vector of the equivalent minimization problem."""
        return self.c if self.sense == "min" else -self.c

    def cone_violation(self, x: np.ndarray) -> float:
        """How far x sits outside the cone (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        off = self.n_free
        if self.n_nonneg:
            worst = max(worst, float(-(x[off:off + self.n_nonneg]).min(initial=0.0)))
            off += self.n_nonneg
        for t in self.psd_dims:
            M = smat(x[off:off + svec_len(t)])
            worst = max(worst, float(-np.linalg.eigvalsh(M).min()))
            off += svec_len(t)
        return worst

    def to_sparse_text(self) -> str:
        """Dump the program in a plain sparse text format.

        Header lines declare the sense, cone structure and sizes; then one
        line per nonzero of c ("c idx value"), A ("A row col value") and
        b ("b row value").  Intended for debugging against external solvers.
        """
        out = io.StringIO()
        out.write(f"sense {self.sense}\n")
        out.write(f"vars {self.n} free {self.n_free} nonneg {self.n_nonneg}\n")
        out.write("psd " + " ".join(str(t) for t in self.psd_dims) + "\n")
        out.write(f"rows {self.n_rows}\n")
        for idx in np.flatnonzero(self.c):
            out.write(f"c {idx} {self.c[idx]!r}\n")
        rows, cols = np.nonzero(self.A)
        for r, cidx in zip(rows, cols):
            out.write(f"A {r} {cidx} {self.A[r, cidx]!r}\n")
        for r in np.flatnonzero(self.b):
            out.write(f"b {r} {self.b[r]!r}\n")
        return out.getvalue()


class ProgramBuilder:
    """Incremental assembly of a ConicProgram.

    Declare spans first (free, then nonneg, then psd -- the standard-form
    order is enforced), then add equality rows as {span name: dense local
    coefficients}.  The objective is likewise given per span.
    """

    def __init__(self, sense: str):
        self.sense = sense
        self._spans: list[Span] = []
        self._counts = {"free": 0, "nonneg": 0, "psd": 0}
        self._psd_dims: list[int] = []
        self._rows: list[dict] = []
        self._rhs: list[float] = []
        self._labels: list[str] = []
        self._obj: dict[str, np.ndarray] = {}
        self._stage = 0  # 0 free, 1 nonneg, 2 psd

    def _add_span(self, name: str, kind: str, length: int, dim: int = 0):
        stage = ("free", "nonneg", "psd").index(kind)
        if stage < self._stage:
            raise ValueError(f"{kind} span {name!r} declared after a later segment")
        self._stage = stage
        offset = sum(sp.length for sp in self._spans)
        self._spans.append(Span(name, kind, offset, length, dim))
        self._counts[kind] += length

    def add_free(self, name: str, length: int):
        self._add_span(name, "free", length)

    def add_nonneg(self, name: str, length: int):
        self._add_span(name, "nonneg", length)

    def add_psd(self, name: str, dim: int):
        self._add_span(name, "psd", svec_len(dim), dim)

    def has_span(self, name: str) -> bool:
        return any(sp.name == name for sp in self._spans)

    def add_row(self, label: str, coeffs: dict[str, np.ndarray], rhs: float):
        self._rows.append(coeffs)
        self._rhs.append(float(rhs))
        self._labels.append(label)

    def set_objective(self, coeffs: dict[str, np.ndarray]):
        self._obj = coeffs

    def _place(self, coeffs: dict, layout: VariableLayout) -> np.ndarray:
        v = np.zeros(layout.size)
        for name, seg in coeffs.items():
            sp = layout.span(name)
            seg = np.atleast_1d(np.asarray(seg, dtype=float))
            if seg.size != sp.length:
                raise ValueError(f"row coefficients for {name!r}: expected {sp.length}, got {seg.size}")
            v[sp.offset:sp.offset + sp.length] = seg
        return v

    def build(self, meta: dict | None = None) -> ConicProgram:
        layout = VariableLayout(tuple(self._spans))
        A = np.zeros((len(self._rows), layout.size))
        for r, coeffs in enumerate(self._rows):
            A[r] = self._place(coeffs, layout)
        return ConicProgram(
            sense=self.sense,
            c=self._place(self._obj, layout),
            A=A,
            b=np.array(self._rhs, dtype=float),
            n_free=self._counts["free"],
            n_nonneg=self._counts["nonneg"],
            psd_dims=tuple(sp.dim for sp in self._spans if sp.kind == "psd"),
            layout=layout,
            row_labels=tuple(self._labels),
            meta=meta or {},
        )
