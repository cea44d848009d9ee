"""Weyl's three conditions on the rotation algebra and Cartan's PA/PB.

Two independent routes decide the same linear fact:

* :func:`check_cartan_postulates` builds the antisymmetrization map
  ``delta: g (x) V* -> V (x) L2 V*`` from the algebra basis and reads off
  its rank (existence of a torsion-free representative) and nullity
  (uniqueness).
* :func:`symmetric_system_kernel` starts from tensors symmetric in the
  lower indices and imposes membership in g through the annihilator of g.

Both are exact; the verdict cross-checks them.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact_linalg import RatMatrix, annihilator, inverse, nullspace, rref
from .lie_algebra import MatrixLieAlgebra, gl, line_stab, sl, so, sp


class InvariantError(AssertionError):
    """An internal consistency check between verdict fields failed."""


class CatalogError(ValueError):
    pass


def lower_pairs(n: int) -> list[tuple[int, int]]:
    return [(j, k) for j in range(n) for k in range(j + 1, n)]


@dataclass(frozen=True)
class Lemma1Basic:
    cond1: bool
    cond2: bool
    witness: RatMatrix | None = None


def check_lemma1_basic(alg: MatrixLieAlgebra) -> Lemma1Basic:
    n = alg.n
    cond1 = alg.dim == n * (n - 1) // 2
    witness = next((b for b in alg.basis if b.trace() != 0), None)
    return Lemma1Basic(cond1, witness is None, witness)


@dataclass(frozen=True)
class SymmetricSystem:
    """Matrices A_1..A_n in g with entry (i, j) of A_k symmetric in (j, k)."""

    n: int
    matrices: tuple[RatMatrix, ...]
    coefficients: tuple[tuple[Fraction, ...], ...]

    def entry(self, i: int, j: int, k: int) -> Fraction:
        return self.matrices[k][i, j]

    def is_symmetric(self) -> bool:
        n = self.n
        return all(self.entry(i, j, k) == self.entry(i, k, j)
                   for i in range(n) for j in range(n) for k in range(n))

    def to_json(self) -> dict:
        return {"kind": "symmetric_system",
                "matrices": [m.to_json() for m in self.matrices],
                "coefficients": [[str(c) for c in row] for row in self.coefficients]}


def _sym_index(n: int) -> dict[tuple[int, int, int], int]:
    idx = {}
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                idx[(i, j, k)] = len(idx)
    return idx


def symmetric_system_kernel(alg: MatrixLieAlgebra, max_witnesses: int | None = None
                            ) -> tuple[int, list[SymmetricSystem]]:
    """Dimension and basis of the symmetric systems inside g.

    Condition (3) of Weyl's lemma holds iff the dimension is 0.  Witness
    construction (coordinates in the basis of g) can be capped with
    ``max_witnesses``; the dimension is always exact.
    """
    n = alg.n
    idx = _sym_index(n)
    nunk = len(idx)
    ann = annihilator(alg.basis) if alg.basis else [
        tuple(1 if t == s else 0 for t in range(n * n)) for s in range(n * n)]
    rows = []
    for k in range(n):
        for fn in ann:
            row = [0] * nunk
            for i in range(n):
                for j in range(n):
                    c = fn[i * n + j]
                    if c:
                        row[idx[(i,) + tuple(sorted((j, k)))]] += c
            rows.append(row)
    if rows:
        kernel = nullspace(RatMatrix.from_rows(rows))
    else:
        kernel = [RatMatrix.column([1 if t == s else 0 for t in range(nunk)]) for s in range(nunk)]
    dim = len(kernel)
    if max_witnesses is not None:
        kernel = kernel[:max_witnesses]
    systems = []
    for v in kernel:
        flat = v.flatten()
        mats = tuple(RatMatrix(n, n, [flat[idx[(i,) + tuple(sorted((j, k)))]]
                                      for i in range(n) for j in range(n)]) for k in range(n))
        coeffs = []
        for m in mats:
            c = alg.coordinates(m)
            if c is None:
                raise InvariantError(f"{alg.name}: kernel element left the algebra")
            coeffs.append(tuple(c))
        systems.append(SymmetricSystem(n, mats, tuple(coeffs)))
    return dim, systems


@dataclass(frozen=True)
class DeltaMap:
    matrix: RatMatrix
    domain_dim: int
    codomain_dim: int
    rank: int
    nullity: int


def delta_matrix(alg: MatrixLieAlgebra) -> RatMatrix:
    """Matrix of A -> (A^i_jk - A^i_kj)_{j<k} in the basis B_a (x) e^m.

    Column ``a * n + m`` is the adjustment A^i_jk = (B_a)_ij delta_km; row
    ``i * len(pairs) + p`` is the torsion component T^i_jk for the p-th
    pair j < k.
    """
    n = alg.n
    pairs = lower_pairs(n)
    ncols = alg.dim * n
    out = [[0] * ncols for _ in range(n * len(pairs))]
    for a, b in enumerate(alg.basis):
        for m in range(n):
            col = a * n + m
            for i in range(n):
                for p, (j, k) in enumerate(pairs):
                    v = 0
                    if k == m:
                        v += b[i, j]
                    if j == m:
                        v -= b[i, k]
                    if v:
                        out[i * len(pairs) + p][col] = v
    return RatMatrix(n * len(pairs), ncols, (v for row in out for v in row))


def check_cartan_postulates(alg: MatrixLieAlgebra) -> tuple[bool, bool, DeltaMap]:
    """(PA, PB, delta): PA iff delta is onto, PB iff delta is injective."""
    m = delta_matrix(alg)
    _, _, rk = rref(m) if m.rows and m.cols else (None, (), 0)
    delta = DeltaMap(m, m.cols, m.rows, rk, m.cols - rk)
    return delta.rank == delta.codomain_dim, delta.nullity == 0, delta


@dataclass(frozen=True)
class PoSVerdict:
    algebra: str
    n: int
    dim: int
    cond1_dimension: bool
    cond2_traceless: bool
    cond3_kernel_dim: int
    PA: bool
    PB: bool
    delta_rank: int
    delta_nullity: int
    witnesses: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.PB != (self.cond3_kernel_dim == 0):
            raise InvariantError(f"{self.algebra}: PB={self.PB} but symmetric kernel has "
                                 f"dimension {self.cond3_kernel_dim}")
        if self.PA and self.PB and not self.cond1_dimension:
            raise InvariantError(f"{self.algebra}: PA and PB hold but dim {self.dim} != n(n-1)/2")

    @property
    def lemma1(self) -> bool:
        return self.cond1_dimension and self.cond2_traceless and self.cond3_kernel_dim == 0

    def survives(self, use_trace: bool = True) -> bool:
        ok = self.cond1_dimension and self.cond3_kernel_dim == 0 and self.PA and self.PB
        return ok and (self.cond2_traceless or not use_trace)

    def fields(self) -> tuple:
        """Every verdict field except the algebra label and witnesses."""
        return (self.n, self.dim, self.cond1_dimension, self.cond2_traceless,
                self.cond3_kernel_dim, self.PA, self.PB, self.delta_rank, self.delta_nullity)

    def to_json(self) -> dict:
        return {"algebra": self.algebra, "n": self.n, "dim": self.dim,
                "cond1": self.cond1_dimension, "cond2": self.cond2_traceless,
                "cond3_kernel_dim": self.cond3_kernel_dim, "PA": self.PA, "PB": self.PB,
                "delta_rank": self.delta_rank, "delta_nullity": self.delta_nullity,
                "witnesses": list(self.witnesses)}


def pos_verdict(alg: MatrixLieAlgebra, max_witnesses: int = 3) -> PoSVerdict:
    basic = check_lemma1_basic(alg)
    kdim, systems = symmetric_system_kernel(alg, max_witnesses=max_witnesses)
    pa, pb, delta = check_cartan_postulates(alg)
    witnesses = []
    if basic.witness is not None:
        witnesses.append({"kind": "non_traceless", "element": basic.witness.to_json()})
    witnesses.extend(s.to_json() for s in systems)
    return PoSVerdict(alg.name, alg.n, alg.dim, basic.cond1, basic.cond2, kdim, pa, pb,
                      delta.rank, delta.nullity, tuple(witnesses))


def default_catalog(n: int) -> list[MatrixLieAlgebra]:
    """so(p,q) for p = n..0, then sl(n), gl(n), line_stab(n) and sp(n) for even n."""
    if n < 2:
        raise CatalogError("the space problem needs n >= 2")
    cat = [so(p, n - p) for p in range(n, -1, -1)]
    cat += [sl(n), gl(n), line_stab(n)]
    if n % 2 == 0:
        cat.append(sp(n))
    return cat


def is_orthogonal_name(name: str) -> bool:
    return name.startswith("so(")


@dataclass(frozen=True)
class CatalogResult:
    n: int
    verdicts: tuple[PoSVerdict, ...]
    survivors: tuple[str, ...]
    expected: tuple[str, ...]

    @property
    def matches(self) -> bool:
        return set(self.survivors) == set(self.expected)

    def to_json(self) -> dict:
        return {"n": self.n, "verdicts": [v.to_json() for v in self.verdicts],
                "survivors": list(self.survivors), "expected_survivors": list(self.expected),
                "matches_orthogonal_family": self.matches}


def verify_catalog(n: int, catalog: Sequence[MatrixLieAlgebra], jobs: int | None = None,
                   use_trace: bool = True, max_witnesses: int = 3) -> CatalogResult:
    """Verdicts for every algebra; survivors must be exactly the so(p,q).

    ``jobs > 1`` evaluates algebras in worker processes; verdict order is
    the catalog order either way.
    """
    for alg in catalog:
        if alg.n != n:
            raise CatalogError(f"{alg.name} has n={alg.n}, catalog is for n={n}")
    if jobs and jobs > 1 and len(catalog) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            verdicts = tuple(pool.map(pos_verdict, catalog, [max_witnesses] * len(catalog)))
    else:
        verdicts = tuple(pos_verdict(a, max_witnesses) for a in catalog)
    survivors = tuple(v.algebra for v in verdicts if v.survives(use_trace))
    expected = tuple(a.name for a in catalog if is_orthogonal_name(a.name))
    return CatalogResult(n, verdicts, survivors, expected)


def conjugate(alg: MatrixLieAlgebra, u: RatMatrix, name: str | None = None) -> MatrixLieAlgebra:
    """The algebra u^-1 g u; raises ZeroDivisionError for singular u."""
    if u.shape != (alg.n, alg.n):
        raise ValueError(f"conjugating matrix has shape {u.shape}, expected {alg.n}x{alg.n}")
    ui = inverse(u)
    return MatrixLieAlgebra(name or f"{alg.name}^u", alg.n, tuple(ui @ b @ u for b in alg.basis))
