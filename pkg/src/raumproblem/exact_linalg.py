"""Exact rational matrices, row reduction, nullspaces and span membership.

Entries are :class:`fractions.Fraction`, which already keeps numerator and
denominator in lowest terms with a positive denominator.  Row reduction
clears denominators row by row and runs a fraction-free integer Gauss-Jordan
elimination, removing row content after every update; nothing in this
module ever rounds.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

Rational = Fraction

_RATIONAL_RE = re.compile(r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$")
_SMALL = {i: Fraction(i) for i in range(-64, 65)}


def _frac(e) -> Fraction:
    if type(e) is Fraction:
        return e
    if type(e) is int and -64 <= e <= 64:
        return _SMALL[e]
    return Fraction(e)


class ShapeError(ValueError):
    pass


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` or ``"p"``; decimal notation is rejected."""
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise ValueError(f"not a rational literal: {text!r}")
    return Fraction(text.replace(" ", ""))


def format_rational(q: Fraction) -> str:
    return str(q)


class RatMatrix:
    """Immutable rows x cols matrix of Fractions, stored row-major."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable = ()):
        entries = tuple(map(_frac, entries))
        if len(entries) != rows * cols:
            raise ShapeError(f"{rows}x{cols} matrix needs {rows * cols} entries, got {len(entries)}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("RatMatrix is immutable")

    def __reduce__(self):
        return (RatMatrix, (self.rows, self.cols, self.entries))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "RatMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ShapeError("ragged rows")
        return cls(len(rows), ncols, (e for r in rows for e in r))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RatMatrix":
        return cls(rows, cols, [0] * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls(n, n, [1 if i == j else 0 for i in range(n) for j in range(n)])

    @classmethod
    def unit(cls, n: int, i: int, j: int) -> "RatMatrix":
        """Elementary matrix E_ij (0-based)."""
        e = [0] * (n * n)
        e[i * n + j] = 1
        return cls(n, n, e)

    @classmethod
    def column(cls, values: Sequence) -> "RatMatrix":
        return cls(len(values), 1, values)

    @classmethod
    def diag(cls, values: Sequence) -> "RatMatrix":
        n = len(values)
        return cls(n, n, [values[i] if i == j else 0 for i in range(n) for j in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def tolist(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "RatMatrix":
        return RatMatrix(self.cols, self.rows,
                         (self[i, j] for j in range(self.cols) for i in range(self.rows)))

    T = property(transpose)

    def trace(self) -> Fraction:
        if self.rows != self.cols:
            raise ShapeError("trace of a non-square matrix")
        return sum((self[i, i] for i in range(self.rows)), Fraction(0))

    def flatten(self) -> tuple:
        return self.entries

    def is_zero(self) -> bool:
        return not any(self.entries)

    def __eq__(self, other):
        if not isinstance(other, RatMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def _same_shape(self, other):
        if not isinstance(other, RatMatrix) or other.shape != self.shape:
            raise ShapeError(f"shape mismatch: {self.shape} vs {getattr(other, 'shape', None)}")

    def __add__(self, other):
        self._same_shape(other)
        return RatMatrix(self.rows, self.cols, (a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other):
        self._same_shape(other)
        return RatMatrix(self.rows, self.cols, (a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self):
        return RatMatrix(self.rows, self.cols, (-a for a in self.entries))

    def scale(self, c) -> "RatMatrix":
        c = Fraction(c)
        return RatMatrix(self.rows, self.cols, (c * a for a in self.entries))

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    def __matmul__(self, other):
        if not isinstance(other, RatMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        ocols = [other.entries[j::other.cols] for j in range(other.cols)]
        out = []
        for i in range(self.rows):
            r = self.row(i)
            for col in ocols:
                out.append(sum((a * b for a, b in zip(r, col) if a and b), Fraction(0)))
        return RatMatrix(self.rows, other.cols, out)

    def __repr__(self):
        body = "; ".join(" ".join(str(e) for e in self.row(i)) for i in range(self.rows))
        return f"RatMatrix({self.rows}x{self.cols}: [{body}])"

    def to_json(self) -> list[list[str]]:
        return [[format_rational(e) for e in self.row(i)] for i in range(self.rows)]

    @classmethod
    def from_json(cls, data) -> "RatMatrix":
        return cls.from_rows([[parse_rational(e) for e in row] for row in data])


def _primitive(row):
    g = 0
    for v in row:
        if v:
            g = gcd(g, v)
            if g == 1:
                return row
    if g > 1:
        return [v // g for v in row]
    return row


def _gauss_jordan(rows, ncols):
    """Reduce integer rows in place to scaled reduced row echelon form.

    On return the first ``len(pivots)`` rows have a positive entry in their
    pivot column, zeros in every other pivot column, and content 1; the
    remaining rows are zero.  Returns ``(rows, pivots)``.
    """
    m = len(rows)
    pivots = []
    r = 0
    for c in range(ncols):
        if r == m:
            break
        best = -1
        for i in range(r, m):
            v = rows[i][c]
            if v and (best < 0 or abs(v) < abs(rows[best][c])):
                best = i
        if best < 0:
            continue
        rows[r], rows[best] = rows[best], rows[r]
        prow = rows[r]
        if prow[c] < 0:
            prow = [-v for v in prow]
        prow = _primitive(prow)
        rows[r] = prow
        pv = prow[c]
        for i in range(m):
            if i == r:
                continue
            row = rows[i]
            a = row[c]
            if not a:
                continue
            g = gcd(pv, a)
            s, t = pv // g, a // g
            rows[i] = _primitive([s * x - t * y for x, y in zip(row, prow)])
        pivots.append(c)
        r += 1
    return rows, pivots


def _integer_rows(m: RatMatrix) -> list[list[int]]:
    out = []
    for i in range(m.rows):
        r = m.row(i)
        d = lcm(*(e.denominator for e in r)) if r else 1
        out.append([e.numerator * (d // e.denominator) for e in r])
    return out


def _reduce(m: RatMatrix):
    if not m.rows or not m.cols:
        return [[0] * m.cols for _ in range(m.rows)], []
    return _gauss_jordan(_integer_rows(m), m.cols)


def rref(m: RatMatrix) -> tuple[RatMatrix, tuple[int, ...], int]:
    """Reduced row echelon form of ``m``, its pivot columns and its rank."""
    rows, pivots = _reduce(m)
    entries = []
    for r, row in enumerate(rows):
        if r < len(pivots):
            pv = row[pivots[r]]
            entries.extend(Fraction(v, pv) if v else _SMALL[0] for v in row)
        else:
            entries.extend([_SMALL[0]] * m.cols)
    return RatMatrix(m.rows, m.cols, entries), tuple(pivots), len(pivots)


def rank(m: RatMatrix) -> int:
    return len(_reduce(m)[1])


def nullspace(m: RatMatrix) -> list[RatMatrix]:
    """Exact basis of ``{v : m v = 0}`` as column vectors.

    One vector per free column, with a 1 in that column (the standard
    RREF parametrization), so the output is deterministic.
    """
    rows, pivots = _reduce(m)
    pivot_set = set(pivots)
    zero, one = _SMALL[0], _SMALL[1]
    basis = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        v = [zero] * m.cols
        v[free] = one
        for i, pc in enumerate(pivots):
            a = rows[i][free]
            if a:
                v[pc] = Fraction(-a, rows[i][pc])
        basis.append(RatMatrix(m.cols, 1, v))
    return basis


def stack_columns(vectors: Sequence[RatMatrix]) -> RatMatrix:
    """Matrix whose columns are the flattened ``vectors``."""
    if not vectors:
        raise ShapeError("no vectors to stack")
    flat = [v.flatten() for v in vectors]
    length = len(flat[0])
    if any(len(f) != length for f in flat):
        raise ShapeError("vectors differ in size")
    return RatMatrix(length, len(flat), (f[i] for i in range(length) for f in flat))


def solve_membership(span: Sequence[RatMatrix], target: RatMatrix) -> list[Fraction] | None:
    """Coefficients ``c`` with ``sum(c_a * span[a]) == target``, or None.

    All span elements and the target must share one shape.  When the span
    is dependent the returned coefficients are the ones with zero weight on
    non-pivot elements.
    """
    for s in span:
        if s.shape != target.shape:
            raise ShapeError(f"span element {s.shape} does not match target {target.shape}")
    if not span:
        return [] if target.is_zero() else None
    a = stack_columns(list(span) + [target])
    r, pivots, _ = rref(a)
    k = len(span)
    if k in pivots:
        return None
    coeffs = [Fraction(0)] * k
    for i, pc in enumerate(pivots):
        coeffs[pc] = r[i, k]
    return coeffs


def combine(coeffs: Sequence, span: Sequence[RatMatrix]) -> RatMatrix:
    if not span:
        raise ShapeError("empty span")
    out = RatMatrix.zeros(*span[0].shape)
    for c, s in zip(coeffs, span):
        if c:
            out = out + s.scale(c)
    return out


def annihilator(vectors: Sequence[RatMatrix]) -> list[tuple[Fraction, ...]]:
    """Basis of linear functionals vanishing on every element of ``vectors``.

    Functionals act on flattened entries; a subspace of dimension d inside
    a space of dimension D has D - d independent annihilating functionals.
    """
    a = stack_columns(vectors).transpose()
    return [v.flatten() for v in nullspace(a)]


def inverse(m: RatMatrix) -> RatMatrix:
    if m.rows != m.cols:
        raise ShapeError("inverse of a non-square matrix")
    n = m.rows
    aug = RatMatrix(n, 2 * n, (e for i in range(n)
                               for e in m.row(i) + tuple(1 if i == j else 0 for j in range(n))))
    r, pivots, _ = rref(aug)
    if tuple(pivots[:n]) != tuple(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return RatMatrix(n, n, (r[i, n + j] for i in range(n) for j in range(n)))
