"""Matrix Lie algebras over Q: constructors, brackets, closure, normalizers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact_linalg import (
    RatMatrix,
    ShapeError,
    annihilator,
    nullspace,
    rank,
    solve_membership,
    stack_columns,
)

KINDS = ("so", "sl", "sp", "gl", "line_stab")


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class SignatureForm:
    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q == 0:
            raise AlgebraError(f"invalid signature ({self.p},{self.q})")

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def eta(self) -> RatMatrix:
        return RatMatrix.diag([1] * self.p + [-1] * self.q)


@dataclass(frozen=True)
class MatrixLieAlgebra:
    """Span of linearly independent n x n rational matrices.

    Independence is checked on construction; bracket closure is not (use
    :func:`check_closure`), so that non-closed spans can still be examined.
    """

    name: str
    n: int
    basis: tuple[RatMatrix, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        for b in self.basis:
            if b.shape != (self.n, self.n):
                raise ShapeError(f"{self.name}: basis element of shape {b.shape}, expected {self.n}x{self.n}")
        if self.basis and rank(stack_columns(self.basis)) != len(self.basis):
            raise AlgebraError(f"{self.name}: basis is linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, x: RatMatrix) -> bool:
        return solve_membership(self.basis, x) is not None

    def coordinates(self, x: RatMatrix) -> list[Fraction] | None:
        return solve_membership(self.basis, x)

    def float_basis(self) -> np.ndarray:
        """Basis as a (dim, n, n) float array."""
        return np.array([[[float(b[i, j]) for j in range(self.n)] for i in range(self.n)]
                         for b in self.basis], dtype=float).reshape(self.dim, self.n, self.n)

    def to_json(self) -> dict:
        return {"name": self.name, "n": self.n, "basis": [b.to_json() for b in self.basis]}

    @classmethod
    def from_json(cls, data) -> "MatrixLieAlgebra":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            name, n, basis = data["name"], int(data["n"]), data["basis"]
        except (KeyError, TypeError) as exc:
            raise AlgebraError(f"malformed algebra JSON: {exc}") from None
        return cls(name, n, tuple(RatMatrix.from_json(b) for b in basis))


def bracket(a: RatMatrix, b: RatMatrix) -> RatMatrix:
    if a.rows != a.cols or a.shape != b.shape:
        raise ShapeError(f"bracket needs equal square shapes, got {a.shape} and {b.shape}")
    return a @ b - b @ a


@dataclass(frozen=True)
class ClosureVerdict:
    closed: bool
    failing_pair: tuple[int, int] | None = None
    failing_bracket: RatMatrix | None = None

    def __bool__(self):
        return self.closed


def check_closure(alg: MatrixLieAlgebra) -> ClosureVerdict:
    ann = annihilator(alg.basis) if alg.basis else None
    for a in range(alg.dim):
        for b in range(a + 1, alg.dim):
            c = bracket(alg.basis[a], alg.basis[b])
            flat = c.flatten()
            if any(sum(l * v for l, v in zip(fn, flat) if l and v) for fn in ann):
                return ClosureVerdict(False, (a, b), c)
    return ClosureVerdict(True)


def _antisym(n: int, i: int, j: int, c: int) -> RatMatrix:
    """E_ij + c E_ji."""
    e = [0] * (n * n)
    e[i * n + j] = 1
    e[j * n + i] = c
    return RatMatrix(n, n, e)


def so(p: int, q: int) -> MatrixLieAlgebra:
    """so(p,q) = {X : X^T eta + eta X = 0}, basis E_ij - eta_i eta_j E_ji (i < j)."""
    sig = SignatureForm(p, q)
    n = sig.n
    signs = [1] * p + [-1] * q
    basis = [_antisym(n, i, j, -signs[i] * signs[j]) for i in range(n) for j in range(i + 1, n)]
    return MatrixLieAlgebra(f"so({p},{q})", n, tuple(basis))


def _sl_basis(n: int, skip=lambda i, j: False) -> list[RatMatrix]:
    basis = [RatMatrix.unit(n, i, j) for i in range(n) for j in range(n) if i != j and not skip(i, j)]
    for i in range(n - 1):
        basis.append(RatMatrix.unit(n, i, i) - RatMatrix.unit(n, i + 1, i + 1))
    return basis


def sl(n: int) -> MatrixLieAlgebra:
    if n < 1:
        raise AlgebraError("sl(n) needs n >= 1")
    return MatrixLieAlgebra(f"sl({n})", n, tuple(_sl_basis(n)))


def gl(n: int) -> MatrixLieAlgebra:
    if n < 1:
        raise AlgebraError("gl(n) needs n >= 1")
    return MatrixLieAlgebra(f"gl({n})", n, tuple(RatMatrix.unit(n, i, j) for i in range(n) for j in range(n)))


def sp(n: int) -> MatrixLieAlgebra:
    """sp(n), n = 2m: {X : X^T J + J X = 0} with J = [[0, I], [-I, 0]].

    Basis blocks [[A, B], [C, -A^T]] with B, C symmetric.
    """
    if n < 2 or n % 2:
        raise AlgebraError(f"sp needs a positive even size, got {n}")
    m = n // 2
    basis = []
    for i in range(m):
        for j in range(m):
            basis.append(RatMatrix.unit(n, i, j) - RatMatrix.unit(n, m + j, m + i))
    for off_r, off_c in ((0, m), (m, 0)):
        for i in range(m):
            for j in range(i, m):
                e = RatMatrix.unit(n, off_r + i, off_c + j)
                if i != j:
                    e = e + RatMatrix.unit(n, off_r + j, off_c + i)
                basis.append(e)
    return MatrixLieAlgebra(f"sp({n})", n, tuple(basis))


def line_stab(n: int) -> MatrixLieAlgebra:
    """Traceless matrices mapping the first coordinate axis into itself."""
    if n < 2:
        raise AlgebraError("line_stab needs n >= 2")
    basis = _sl_basis(n, skip=lambda i, j: j == 0 and i > 0)
    return MatrixLieAlgebra(f"line_stab({n})", n, tuple(basis))


def make_algebra(kind: str, *params: int) -> MatrixLieAlgebra:
    """``make_algebra("so", p, q)``, ``make_algebra("sl", n)`` and so on."""
    builders = {"so": so, "sl": sl, "sp": sp, "gl": gl, "line_stab": line_stab, "line": line_stab}
    try:
        builder = builders[kind]
    except KeyError:
        raise AlgebraError(f"unknown algebra kind {kind!r}; expected one of {KINDS}") from None
    expected = 2 if kind == "so" else 1
    if len(params) != expected:
        raise AlgebraError(f"{kind} takes {expected} integer parameter(s), got {params}")
    return builder(*params)


def parse_algebra_spec(text: str) -> MatrixLieAlgebra:
    """CLI shorthand: ``so:p,q``, ``sl:n``, ``sp:2m``, ``gl:n``, ``line:n``."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise AlgebraError(f"algebra string {text!r} should look like 'so:1,2'")
    try:
        params = tuple(int(p) for p in rest.split(","))
    except ValueError:
        raise AlgebraError(f"bad parameters in algebra string {text!r}") from None
    return make_algebra(kind.strip(), *params)


def normalizer_in_gl(alg: MatrixLieAlgebra) -> MatrixLieAlgebra:
    """{X in gl(n) : [X, B] in alg for every basis element B}.

    Solved as the nullspace of the linear constraints lambda([X, B_a]) = 0,
    one per annihilating functional lambda of alg and basis element B_a.
    """
    n = alg.n
    units = [RatMatrix.unit(n, i, j) for i in range(n) for j in range(n)]
    if not alg.basis:
        return MatrixLieAlgebra(f"N({alg.name})", n, tuple(units))
    ann = annihilator(alg.basis)
    rows = []
    for b in alg.basis:
        images = [bracket(u, b).flatten() for u in units]
        for fn in ann:
            rows.append([sum(l * v for l, v in zip(fn, img) if l and v) for img in images])
    if not rows:
        return MatrixLieAlgebra(f"N({alg.name})", n, tuple(units))
    kernel = nullspace(RatMatrix.from_rows(rows))
    basis = tuple(RatMatrix(n, n, v.flatten()) for v in kernel)
    return MatrixLieAlgebra(f"N({alg.name})", n, basis)

