"""Coframes, matrix-valued connection forms and Cartan's structure equations.

Array layouts (0-based, leading batch axes allowed):

* coframe ``theta[..., i, a]``: component of omega^i along dx^a,
* connection ``w[..., i, j, a]``: component of omega_j^i along dx^a, so at
  fixed ``a`` the matrix ``w[..., :, :, a]`` is an element of the algebra,
* torsion ``t[..., i, a, b]``: coefficient of Omega^i,
* curvature ``r[..., j, i, a, b]``: coefficient of Omega_i^j, which makes
  ``r[..., :, :, a, b]`` the matrix dw + w ^ w.

Two-form coefficients use (alpha ^ beta)_ab = alpha_a beta_b - alpha_b beta_a.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .chart import ChartDomain, GeometryError
from .config import DEFAULT, ConfigError, Tolerances
from .expr import ExprError, parse
from .lie_algebra import AlgebraError, MatrixLieAlgebra, parse_algebra_spec, so
from .weyl_geometry import _read_json, christoffel, field_metric_jets

PROBE_SCALE = 1e-2


def _field_jets(fields, x, shape):
    """Values and first partials of a nested array of fields.

    Returns ``val[..., *shape]`` and ``d[..., c, *shape]``.
    """
    x = np.asarray(x, dtype=float)
    batch = x.shape[:-1]
    n = x.shape[-1]
    val = np.empty(batch + shape)
    d = np.empty(batch + (n,) + shape)
    for idx in np.ndindex(*shape):
        f = fields
        for k in idx:
            f = f[k]
        v, grad = f.jet1(x)
        val[(Ellipsis,) + idx] = v
        d[(Ellipsis, slice(None)) + idx] = grad
    return val, d


def _nested(data, depth, n, what):
    def walk(node, level):
        if level == depth:
            return node
        if not isinstance(node, (list, tuple)) or len(node) != n:
            raise GeometryError(f"{what} must be nested {depth} deep with {n} entries per level")
        return tuple(walk(c, level + 1) for c in node)
    return walk(data, 0)


def _check_domain(x, domain: ChartDomain):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != domain.n:
        raise GeometryError(f"point has {x.shape[-1]} coordinates, chart has {domain.n}")
    return x


@dataclass(frozen=True, eq=False)
class CoframeField:
    """n one-forms omega^i; ``omega[i][a]`` is the dx^a component."""

    domain: ChartDomain
    omega: tuple

    def __post_init__(self):
        object.__setattr__(self, "omega", _nested(self.omega, 2, self.domain.n, "coframe"))

    @property
    def n(self) -> int:
        return self.domain.n

    def jets(self, x):
        return _field_jets(self.omega, _check_domain(x, self.domain), (self.n, self.n))

    def values(self, x) -> np.ndarray:
        return self.jets(x)[0]

    def check_invertible(self, points=None):
        pts = self.domain.sample_points() if points is None else np.asarray(points, dtype=float)
        cond = np.linalg.cond(self.values(pts))
        bad = ~(cond < 1e12)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise GeometryError(f"coframe is not invertible at {pts[k].tolist()}")


@dataclass(frozen=True, eq=False)
class ConnectionForms:
    """Matrix of one-forms; ``forms[i][j][a]`` is omega_j^i along dx^a."""

    domain: ChartDomain
    algebra: MatrixLieAlgebra
    forms: tuple

    def __post_init__(self):
        if self.algebra.n != self.domain.n:
            raise GeometryError(f"algebra acts on R^{self.algebra.n}, chart has n={self.domain.n}")
        object.__setattr__(self, "forms", _nested(self.forms, 3, self.domain.n, "connection"))

    @property
    def n(self) -> int:
        return self.domain.n

    def jets(self, x):
        n = self.n
        return _field_jets(self.forms, _check_domain(x, self.domain), (n, n, n))

    def values(self, x) -> np.ndarray:
        return self.jets(x)[0]


def _same_domain(cf: CoframeField, conn: ConnectionForms):
    if cf.domain != conn.domain:
        raise GeometryError("coframe and connection live on different charts")


def _exterior(d, idx_axes: int):
    """d_a alpha_b - d_b alpha_a from partials ``d[..., c, *idx, a]``.

    ``idx_axes`` counts the matrix index axes between the derivative axis
    and the form axis; the result is indexed ``[..., *idx, a, b]``.
    """
    da = np.moveaxis(d, -idx_axes - 2, -2)
    return da - np.swapaxes(da, -1, -2)


def _antisym(a):
    return a - np.swapaxes(a, -1, -2)


def torsion_from_values(cf: CoframeField, w, x) -> np.ndarray:
    """Torsion for connection values ``w[..., i, j, a]`` given at the points x.

    Only the values of w enter the first structure equation, so this also
    serves connections known pointwise (the Levi-Civita forms).
    """
    theta, dtheta = cf.jets(x)
    quad = np.einsum("...ka,...ikb->...iab", theta, w)
    return _exterior(dtheta, 1) - _antisym(quad)


def torsion(cf: CoframeField, conn: ConnectionForms, x) -> np.ndarray:
    """(Omega^i)_ab = d_a w^i_b - d_b w^i_a - sum_k (w^k_a (w_k^i)_b - w^k_b (w_k^i)_a)."""
    _same_domain(cf, conn)
    return torsion_from_values(cf, conn.values(x), x)


def curvature(conn: ConnectionForms, x) -> np.ndarray:
    """(Omega_i^j)_ab = d_a (w_i^j)_b - d_b (w_i^j)_a - sum_k (w_i^k ^ w_k^j)_ab."""
    w, dw = conn.jets(x)
    quad = np.einsum("...kia,...jkb->...jiab", w, w)
    return _exterior(dw, 2) - _antisym(quad)


def exterior_derivative(conn: ConnectionForms, x) -> np.ndarray:
    """d of each form alone, laid out like :func:`curvature`."""
    return _exterior(conn.jets(x)[1], 2)


def curvature_to_coordinates(r, theta) -> np.ndarray:
    """Frame curvature r[..., j, i, a, b] as R^mu_nu_ab in the coordinate basis."""
    e = np.linalg.inv(theta)
    return np.einsum("...mj,...jiab,...in->...mnab", e, r, theta)


def _eta(signature) -> np.ndarray:
    p, q = signature
    return np.diag([1.0] * p + [-1.0] * q)


def orthonormality_defect(g, cf: CoframeField, x, signature) -> float:
    """max |g_ab - eta_ij theta^i_a theta^j_b| over the points x."""
    gval = field_metric_jets(g, x)[0]
    theta = cf.values(x)
    pulled = np.einsum("...ia,ij,...jb->...ab", theta, _eta(signature), theta)
    return float(np.max(np.abs(gval - pulled), initial=0.0))


def levi_civita_connection_forms(g, cf: CoframeField, x, signature=None,
                                 tol: Tolerances = DEFAULT) -> np.ndarray:
    """so(p,q)-valued torsion-free forms w[..., i, j, a] at the points x.

    The coordinate Christoffel symbols are moved into the frame:
    w_a = theta Gamma_a E - (d_a theta) E with E the inverse coframe and
    (Gamma_a)^m_n = Gamma^m_an.
    """
    n = cf.n
    signature = tuple(signature) if signature is not None else (n, 0)
    x = _check_domain(x, cf.domain)
    pts = np.concatenate([cf.domain.sample_points(), x.reshape(-1, n)])
    defect = orthonormality_defect(g, cf, pts, signature)
    if not defect < tol.orthonormal:
        raise GeometryError(f"coframe is not orthonormal for g (defect {defect:.3g})")
    gval, dg, _ = field_metric_jets(g, x)
    gamma = christoffel(gval, dg)
    theta, dtheta = cf.jets(x)
    e = np.linalg.inv(theta)
    return (np.einsum("...im,...man,...nj->...ija", theta, gamma, e)
            - np.einsum("...ain,...nj->...ija", dtheta, e))


@dataclass(frozen=True)
class ValuednessVerdict:
    passed: bool
    worst_residual: float
    worst_point: tuple
    worst_direction: int

    def to_json(self) -> dict:
        return {"passed": self.passed, "worst_residual": self.worst_residual,
                "worst_point": list(self.worst_point), "worst_direction": self.worst_direction}


def projection_residual(algebra: MatrixLieAlgebra, w) -> np.ndarray:
    """Frobenius distance of each matrix w[..., :, :, a] from span(algebra).

    Returned with shape ``w.shape[:-3] + (n,)`` (one value per direction).
    """
    n = algebra.n
    basis = algebra.float_basis().reshape(algebra.dim, n * n)
    q, _ = np.linalg.qr(basis.T)
    mats = np.moveaxis(w, -1, -3).reshape(w.shape[:-3] + (w.shape[-1], n * n))
    rest = mats - (mats @ q) @ q.T
    return np.linalg.norm(rest, axis=-1)


def check_algebra_valued(conn: ConnectionForms, tol: Tolerances = DEFAULT,
                         points=None) -> ValuednessVerdict:
    pts = conn.domain.sample_points() if points is None else np.asarray(points, dtype=float)
    res = projection_residual(conn.algebra, conn.values(pts))
    k, a = np.unravel_index(int(np.argmax(res)), res.shape)
    worst = float(res[k, a])
    return ValuednessVerdict(worst < tol.membership, worst, tuple(pts[k].tolist()), int(a))


def probe_family(algebra: MatrixLieAlgebra) -> np.ndarray:
    """Perturbations B (x) dx^b for every basis element B and direction b.

    Shape (dim * n, n, n, n) in the ``w[i, j, a]`` layout, scaled by
    PROBE_SCALE.
    """
    basis = algebra.float_basis()
    n = algebra.n
    out = np.zeros((basis.shape[0] * n, n, n, n))
    for m, b in enumerate(basis):
        for d in range(n):
            out[m * n + d, :, :, d] = PROBE_SCALE * b
    return out


def uniqueness_probe(g, cf: CoframeField, x, signature=None,
                     algebra: MatrixLieAlgebra | None = None) -> float:
    """Smallest max-abs torsion produced by perturbing the Levi-Civita forms
    with a member of :func:`probe_family` (so(p,q) by default)."""
    signature = tuple(signature) if signature is not None else (cf.n, 0)
    algebra = algebra or so(*signature)
    x = _check_domain(x, cf.domain)
    w = levi_civita_connection_forms(g, cf, x, signature)
    smallest = np.inf
    for pert in probe_family(algebra):
        t = torsion_from_values(cf, w + pert, x)
        smallest = min(smallest, float(np.max(np.abs(t))))
    return smallest


@dataclass(frozen=True, eq=False)
class CartanConfig:
    coframe: CoframeField
    connection: ConnectionForms
    g: tuple | None
    signature: tuple[int, int] | None

    @property
    def domain(self) -> ChartDomain:
        return self.coframe.domain


def _parse_nested(data, depth, n, what):
    try:
        nested = _nested(data, depth, n, what)
    except GeometryError as exc:
        raise ConfigError(str(exc)) from None

    def walk(node, level):
        if level == depth:
            return parse(node, n)
        return tuple(walk(c, level + 1) for c in node)
    return walk(nested, 0)


def _signature_of(alg_src) -> tuple[int, int] | None:
    if isinstance(alg_src, str) and alg_src.strip().startswith("so:"):
        p, q = (int(v) for v in alg_src.split(":", 1)[1].split(","))
        return (p, q)
    return None


def load_cartan_config(source) -> CartanConfig:
    """Parse cartan-config JSON (dict, JSON text or path)."""
    data = _read_json(source)
    try:
        n = int(data["n"])
        domain = ChartDomain(n, tuple(tuple(iv) for iv in data["box"]))
        alg_src = data["algebra"]
        algebra = (parse_algebra_spec(alg_src) if isinstance(alg_src, str)
                   else MatrixLieAlgebra.from_json(alg_src))
        coframe = CoframeField(domain, _parse_nested(data["coframe"], 2, n, "coframe"))
        conn = ConnectionForms(domain, algebra, _parse_nested(data["connection"], 3, n, "connection"))
        g = _parse_nested(data["g"], 2, n, "g") if data.get("g") is not None else None
        if g is not None:
            for i in range(n):
                for j in range(i + 1, n):
                    if g[i][j] != g[j][i]:
                        raise ConfigError(f"g[{i}][{j}] and g[{j}][{i}] are different expressions")
        sig = data.get("signature")
        signature = tuple(int(v) for v in sig) if sig is not None else _signature_of(alg_src)
    except KeyError as exc:
        raise ConfigError(f"cartan config is missing {exc}") from None
    except ConfigError:
        raise
    except (AlgebraError, ExprError, GeometryError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid cartan config: {exc}") from None
    return CartanConfig(coframe, conn, g, signature)


SHIPPED_CONFIGS = ("flat", "polar", "sphere")


def shipped_config(name: str) -> CartanConfig:
    if name not in SHIPPED_CONFIGS:
        raise KeyError(f"unknown config {name!r}; shipped: {', '.join(SHIPPED_CONFIGS)}")
    text = resources.files(__package__).joinpath("data", f"cartan_{name}.json").read_text()
    return load_cartan_config(json.loads(text))
