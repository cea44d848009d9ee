"""Weyl's gauge geometry on a coordinate box.

A :class:`WeylStructure` holds one representative ``(g, phi)`` of a gauge
class.  Index conventions used throughout (all 0-based, leading batch axes
allowed wherever a point array is accepted):

* ``dg[..., k, i, j]`` is the partial of g_ij along x_k,
* ``gamma[..., i, j, k]`` is Gamma^i_jk,
* ``residual[..., k, i, j]`` is (nabla_k g)_ij + 2 phi_k g_ij,
* ``riemann[..., i, j, a, b]`` is R^i_jab.

Length transfer follows delta l = -phi(u) l and compatibility is
nabla g + 2 phi (x) g = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import jets
from .chart import ChartDomain, GeometryError
from .config import DEFAULT, ConfigError, Tolerances
from .expr import BinOp, Call, ExprError, Num, ScalarExpression, _mul, _sub, diff, parse
from .jets import Jet2


@dataclass(frozen=True)
class GaugeFunction:
    """Strictly positive scale factor Omega on the chart."""

    omega: object  # anything with jet(x) and value(x)

    def jet(self, x) -> Jet2:
        return self.omega.jet(x)

    def value(self, x) -> np.ndarray:
        return self.omega.value(x)

    def check_positive(self, domain: ChartDomain):
        pts = domain.sample_points()
        vals = np.asarray(self.value(pts))
        bad = np.flatnonzero(~(vals > 0))
        if bad.size:
            raise GeometryError(f"gauge function is not positive at {pts[bad[0]].tolist()} "
                                f"(value {vals[bad[0]]:.6g})")


def _omega_field(om):
    return om.omega if isinstance(om, GaugeFunction) else om


class GaugedMetric:
    """Omega^2 * g_ij, evaluated through jets of both factors."""

    def __init__(self, omega, g):
        self.omega = omega
        self.g = g

    def jet(self, x) -> Jet2:
        w = self.omega.jet(x)
        return w * w * self.g.jet(x)

    def value(self, x):
        return self.omega.value(x) ** 2 * self.g.value(x)

    def __eq__(self, other):
        return isinstance(other, GaugedMetric) and self.omega == other.omega and self.g == other.g

    def __hash__(self):
        return hash((self.omega, self.g))

    def to_expression(self) -> ScalarExpression:
        om, g = _as_expression(self.omega), _as_expression(self.g)
        return ScalarExpression(_mul(BinOp("^", om.ast, Num(2.0)), g.ast), max(om.n, g.n))


class GaugedPhi:
    """phi_i - partial_i log Omega.

    The shift comes from the jet of log(Omega), so the value and first
    partials are exact; only first-order data exists for this field.
    """

    def __init__(self, phi, omega, index: int):
        self.phi = phi
        self.omega = omega
        self.index = index

    def _log_omega(self, x) -> Jet2:
        w = self.omega.jet(x)
        if not np.all(w.value > 0):
            raise GeometryError("gauge function is not positive at an evaluation point")
        return jets.log(w)

    def jet1(self, x):
        lw = self._log_omega(x)
        v, g = self.phi.jet1(x)
        return v - lw.gradient[..., self.index], g - lw.hessian[..., self.index, :]

    def value(self, x):
        return self.jet1(x)[0]

    def to_expression(self) -> ScalarExpression:
        phi, om = _as_expression(self.phi), _as_expression(self.omega)
        shift = diff(Call("log", om.ast), self.index + 1)
        return ScalarExpression(_sub(phi.ast, shift), max(phi.n, om.n))


def _as_expression(field) -> ScalarExpression:
    if isinstance(field, ScalarExpression):
        return field
    if hasattr(field, "to_expression"):
        return field.to_expression()
    raise GeometryError(f"{type(field).__name__} has no expression form")


@dataclass(frozen=True, eq=False)
class WeylStructure:
    domain: ChartDomain
    g: tuple
    phi: tuple
    signature: tuple[int, int]

    def __post_init__(self):
        n = self.domain.n
        object.__setattr__(self, "g", tuple(tuple(row) for row in self.g))
        object.__setattr__(self, "phi", tuple(self.phi))
        object.__setattr__(self, "signature", tuple(int(s) for s in self.signature))
        if len(self.g) != n or any(len(row) != n for row in self.g):
            raise GeometryError(f"metric must be {n}x{n}")
        if len(self.phi) != n:
            raise GeometryError(f"phi needs {n} components")
        p, q = self.signature
        if p < 0 or q < 0 or p + q != n:
            raise GeometryError(f"signature {self.signature} does not fit n={n}")
        for i in range(n):
            for j in range(i + 1, n):
                if self.g[i][j] is not self.g[j][i] and self.g[i][j] != self.g[j][i]:
                    raise GeometryError(f"g[{i}][{j}] and g[{j}][{i}] differ")

    @property
    def n(self) -> int:
        return self.domain.n

    def metric_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.n
        out = np.empty(x.shape[:-1] + (n, n))
        for i in range(n):
            for j in range(i, n):
                out[..., i, j] = out[..., j, i] = self.g[i][j].value(x)
        return out

    def check_metric(self, points=None):
        """Symmetric, nondegenerate and of the declared signature at samples."""
        pts = self.domain.sample_points() if points is None else np.asarray(points, dtype=float)
        eig = np.linalg.eigvalsh(self.metric_values(pts))
        scale = np.max(np.abs(eig), axis=-1)
        degenerate = np.min(np.abs(eig), axis=-1) <= 1e-12 * np.maximum(scale, 1e-300)
        if np.any(degenerate):
            k = int(np.flatnonzero(degenerate)[0])
            raise GeometryError(f"metric is degenerate at {pts[k].tolist()}")
        npos = np.sum(eig > 0, axis=-1)
        wrong = npos != self.signature[0]
        if np.any(wrong):
            k = int(np.flatnonzero(wrong)[0])
            raise GeometryError(f"metric has signature ({int(npos[k])},{self.n - int(npos[k])}) at "
                                f"{pts[k].tolist()}, declared {self.signature}")


@dataclass(frozen=True)
class AffineConnectionValue:
    """Gamma^i_jk at one point; Weyl's connections are torsion-free."""

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim != 3 or len(set(gamma.shape)) != 1:
            raise GeometryError(f"connection value must be n x n x n, got {gamma.shape}")
        object.__setattr__(self, "gamma", gamma)

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.gamma - np.swapaxes(self.gamma, 1, 2)), initial=0.0))


def metric_jets(ws: WeylStructure, x):
    """(g, dg, ddg) at points x: shapes B+(n,n), B+(n,n,n), B+(n,n,n,n)."""
    return field_metric_jets(ws.g, x)


def field_metric_jets(gfields, x):
    """Same as :func:`metric_jets` for a bare symmetric array of fields."""
    x = np.asarray(x, dtype=float)
    n = len(gfields)
    batch = x.shape[:-1]
    g = np.empty(batch + (n, n))
    dg = np.empty(batch + (n, n, n))
    ddg = np.empty(batch + (n, n, n, n))
    for i in range(n):
        for j in range(i, n):
            jt = gfields[i][j].jet(x)
            g[..., i, j] = g[..., j, i] = jt.value
            dg[..., :, i, j] = dg[..., :, j, i] = jt.gradient
            ddg[..., :, :, i, j] = ddg[..., :, :, j, i] = jt.hessian
    return g, dg, ddg


def phi_jets(ws: WeylStructure, x):
    """(phi, dphi) with dphi[..., k, i] the partial of phi_i along x_k."""
    x = np.asarray(x, dtype=float)
    n = ws.n
    phi = np.empty(x.shape[:-1] + (n,))
    dphi = np.empty(x.shape[:-1] + (n, n))
    for i, comp in enumerate(ws.phi):
        v, grad = comp.jet1(x)
        phi[..., i] = v
        dphi[..., :, i] = grad
    return phi, dphi


def _inverse_metric(g, x):
    cond = np.linalg.cond(g)
    bad = ~(cond < 1e12)
    if np.any(bad):
        pts = np.asarray(x, dtype=float).reshape(-1, g.shape[-1])
        k = int(np.flatnonzero(bad.reshape(-1))[0])
        raise GeometryError(f"singular metric at {pts[k].tolist()}")
    return np.linalg.inv(g)


def christoffel(g, dg, ginv=None):
    """Levi-Civita symbols Gamma^i_jk from g and its first partials."""
    if ginv is None:
        ginv = np.linalg.inv(g)
    s = (np.einsum("...jlk->...ljk", dg) + np.einsum("...klj->...ljk", dg)
         - dg)  # s[l, j, k] = d_j g_lk + d_k g_lj - d_l g_jk
    return 0.5 * np.einsum("...il,...ljk->...ijk", ginv, s)


def _weyl_terms(g, ginv, phi):
    n = g.shape[-1]
    eye = np.eye(n)
    phi_up = np.einsum("...il,...l->...i", ginv, phi)
    return (eye[:, :, None] * phi[..., None, None, :]
            + eye[:, None, :] * phi[..., None, :, None]
            - g[..., None, :, :] * phi_up[..., :, None, None])


def compatible_connection(ws: WeylStructure, x) -> np.ndarray:
    """The torsion-free Gamma with nabla g + 2 phi (x) g = 0 at x.

    Gamma^i_jk = LC^i_jk + delta^i_j phi_k + delta^i_k phi_j - g_jk phi^i.
    """
    g, dg, _ = metric_jets(ws, x)
    phi, _ = phi_jets(ws, x)
    ginv = _inverse_metric(g, x)
    return christoffel(g, dg, ginv) + _weyl_terms(g, ginv, phi)


def compatibility_residual(ws: WeylStructure, x, gamma=None) -> np.ndarray:
    """d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il + 2 phi_k g_ij.

    ``gamma`` defaults to :func:`compatible_connection`; pass another
    connection to measure how far it is from compatibility.
    """
    g, dg, _ = metric_jets(ws, x)
    phi, _ = phi_jets(ws, x)
    if gamma is None:
        ginv = _inverse_metric(g, x)
        gamma = christoffel(g, dg, ginv) + _weyl_terms(g, ginv, phi)
    return (dg - np.einsum("...lki,...lj->...kij", gamma, g)
            - np.einsum("...lkj,...il->...kij", gamma, g)
            + 2.0 * phi[..., :, None, None] * g[..., None, :, :])


def length_change(phi_at_u: float, l: float) -> float:
    if l < 0:
        raise ValueError(f"length must be non-negative, got {l}")
    return -phi_at_u * l


def length_curvature(ws: WeylStructure, x) -> np.ndarray:
    """f_ij = d_i phi_j - d_j phi_i."""
    _, dphi = phi_jets(ws, x)
    return dphi - np.swapaxes(dphi, -1, -2)


def riemann_tensor(ws: WeylStructure, x) -> np.ndarray:
    """Curvature R^i_jab of the compatible connection."""
    g, dg, ddg = metric_jets(ws, x)
    phi, dphi = phi_jets(ws, x)
    ginv = _inverse_metric(g, x)
    gamma = christoffel(g, dg, ginv) + _weyl_terms(g, ginv, phi)
    dginv = -np.einsum("...il,...alm,...mj->...aij", ginv, dg, ginv)
    s = (np.einsum("...jlk->...ljk", dg) + np.einsum("...klj->...ljk", dg) - dg)
    ds = (np.einsum("...ajlk->...aljk", ddg) + np.einsum("...aklj->...aljk", ddg)
          - ddg)  # ds[a, l, j, k] = d_a s[l, j, k]
    n = ws.n
    eye = np.eye(n)
    phi_up = np.einsum("...il,...l->...i", ginv, phi)
    dphi_up = (np.einsum("...ail,...l->...ai", dginv, phi)
               + np.einsum("...il,...al->...ai", ginv, dphi))
    dgamma = (0.5 * np.einsum("...ail,...ljk->...aijk", dginv, s)
              + 0.5 * np.einsum("...il,...aljk->...aijk", ginv, ds)
              + eye[:, :, None] * dphi[..., :, None, None, :]
              + eye[:, None, :] * dphi[..., :, None, :, None]
              - dg[..., :, None, :, :] * phi_up[..., None, :, None, None]
              - g[..., None, None, :, :] * dphi_up[..., :, :, None, None])
    return (np.einsum("...aibj->...ijab", dgamma) - np.einsum("...biaj->...ijab", dgamma)
            + np.einsum("...iak,...kbj->...ijab", gamma, gamma)
            - np.einsum("...ibk,...kaj->...ijab", gamma, gamma))


def gauge_transform(ws: WeylStructure, om) -> WeylStructure:
    """(Omega^2 g, phi - d log Omega); Omega must be positive on the domain."""
    gf = om if isinstance(om, GaugeFunction) else GaugeFunction(om)
    gf.check_positive(ws.domain)
    field = gf.omega
    n = ws.n
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = GaugedMetric(field, ws.g[i][j])
    phi = tuple(GaugedPhi(ws.phi[i], field, i) for i in range(n))
    return WeylStructure(ws.domain, tuple(tuple(r) for r in rows), phi, ws.signature)


def _simpson_weights(panels: int) -> np.ndarray:
    if panels < 2 or panels % 2:
        raise ValueError("Simpson's rule needs an even number of panels >= 2")
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * panels)


@dataclass(frozen=True)
class ParametrizedPath:
    """Curve t -> point(t) on [t0, t1] with its velocity."""

    point: object
    velocity: object
    t0: float = 0.0
    t1: float = 1.0


def line_integral(ws: WeylStructure, path, panels: int = 64) -> float:
    """Integral of phi along a polyline ((m, n) vertices) or ParametrizedPath.

    Composite Simpson with ``panels`` panels per polyline segment (or over
    the whole parameter range of a ParametrizedPath).
    """
    w = _simpson_weights(panels)
    s = np.linspace(0.0, 1.0, panels + 1)
    if isinstance(path, ParametrizedPath):
        t = path.t0 + s * (path.t1 - path.t0)
        pts = np.array([path.point(ti) for ti in t], dtype=float)
        vel = np.array([path.velocity(ti) for ti in t], dtype=float) * (path.t1 - path.t0)
        segments = [(pts, vel)]
    else:
        verts = np.asarray(path, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != ws.n or len(verts) < 2:
            raise GeometryError("polyline must be an (m >= 2, n) array of vertices")
        segments = []
        for a, b in zip(verts[:-1], verts[1:]):
            pts = a + s[:, None] * (b - a)
            segments.append((pts, np.broadcast_to(b - a, pts.shape)))
    total = 0.0
    for pts, vel in segments:
        inside = ws.domain.contains(pts)
        if not np.all(inside):
            k = int(np.flatnonzero(~inside)[0])
            raise GeometryError(f"path exits the domain at {pts[k].tolist()}")
        phi, _ = phi_jets(ws, pts)
        total += float(np.dot(w, np.einsum("mi,mi->m", phi, vel)))
    return total


def transport_length(ws: WeylStructure, path, l0: float, panels: int = 64) -> float:
    """Length after transfer along ``path``: l0 * exp(-integral of phi)."""
    if not l0 > 0:
        raise ValueError(f"initial length must be positive, got {l0}")
    return l0 * float(np.exp(-line_integral(ws, path, panels)))


def rectangle_loop(corner, sides, axes=(0, 1)) -> np.ndarray:
    """Counter-clockwise boundary of a coordinate rectangle in the (a, b) plane."""
    corner = np.asarray(corner, dtype=float)
    a, b = axes
    ea = np.zeros_like(corner)
    eb = np.zeros_like(corner)
    ea[a], eb[b] = sides[0], sides[1]
    return np.array([corner, corner + ea, corner + ea + eb, corner + eb, corner])


def curvature_flux(ws: WeylStructure, corner, sides, axes=(0, 1), panels: int = 64) -> float:
    """Double integral of f_ab over the rectangle (tensor Simpson rule)."""
    corner = np.asarray(corner, dtype=float)
    a, b = axes
    w = _simpson_weights(panels)
    s = np.linspace(0.0, 1.0, panels + 1)
    pts = np.broadcast_to(corner, (panels + 1, panels + 1, ws.n)).copy()
    pts[..., a] += s[:, None] * sides[0]
    pts[..., b] += s[None, :] * sides[1]
    f = length_curvature(ws, pts)[..., a, b]
    return float(w @ f @ w) * sides[0] * sides[1]


class StaircaseGauge:
    """Omega(x) = exp(integral of phi from ``base`` to x along the staircase
    that moves x_1 first, then x_2, and so on.

    Derivatives are obtained by differentiating under the integral sign, so
    the jet needs second-order jets of the phi components.
    """

    def __init__(self, ws: WeylStructure, base, panels: int = 64):
        self.ws = ws
        self.base = np.asarray(base, dtype=float)
        self.panels = panels
        for comp in ws.phi:
            if not hasattr(comp, "jet"):
                raise GeometryError("staircase gauge needs phi components with second derivatives")

    def log_jet(self, x) -> Jet2:
        x = np.asarray(x, dtype=float)
        ws, n, b = self.ws, self.ws.n, self.base
        batch = x.shape[:-1]
        w = _simpson_weights(self.panels)
        s = np.linspace(0.0, 1.0, self.panels + 1)
        val = np.zeros(batch)
        grad = np.zeros(batch + (n,))
        hess = np.zeros(batch + (n, n))
        for k in range(n):
            length = x[..., k] - b[k]
            pts = np.empty(batch + (s.size, n))
            pts[..., :k] = x[..., None, :k]
            pts[..., k] = b[k] + s * length[..., None]
            pts[..., k + 1:] = b[k + 1:]
            inside = ws.domain.contains(pts)
            if not np.all(inside):
                raise GeometryError("staircase path leaves the domain")
            jt = ws.phi[k].jet(pts)
            val += (jt.value @ w) * length
            grad[..., :k] += np.einsum("...mj,m->...j", jt.gradient[..., :k], w) * length[..., None]
            hess[..., :k, :k] += (np.einsum("...mjl,m->...jl", jt.hessian[..., :k, :k], w)
                                  * length[..., None, None])
            end = pts[..., -1, :]
            ej = ws.phi[k].jet(end)
            grad[..., k] += ej.value
            hess[..., :k, k] += ej.gradient[..., :k]
            hess[..., k, :k] += ej.gradient[..., :k]
            hess[..., k, k] += ej.gradient[..., k]
        return Jet2(val, grad, hess)

    def jet(self, x) -> Jet2:
        return jets.exp(self.log_jet(x))

    def value(self, x):
        return np.exp(self.log_jet(x).value)


def riemannian_gauge(ws: WeylStructure, base, tol: Tolerances = DEFAULT,
                     panels: int = 64) -> GaugeFunction:
    """Gauge function making phi vanish, for length curvature f = 0.

    Raises GeometryError naming a sample point where max |f| exceeds
    ``tol.curvature_zero``.
    """
    pts = ws.domain.grid()
    f = np.max(np.abs(length_curvature(ws, pts)), axis=(-1, -2))
    bad = np.flatnonzero(f >= tol.curvature_zero)
    if bad.size:
        k = int(bad[np.argmax(f[bad])])
        raise GeometryError(f"length curvature nonzero: max |f| = {f[k]:.3g} at {pts[k].tolist()}")
    base = np.asarray(base, dtype=float)
    if not ws.domain.contains(base):
        raise GeometryError("base point outside the domain")
    return GaugeFunction(StaircaseGauge(ws, base, panels))


def load_geometry_config(source) -> tuple[WeylStructure, ScalarExpression | None]:
    """Parse geometry-config JSON (dict, JSON text or path).

    Returns the structure and the optional ``gauge`` expression.
    """
    data = _read_json(source)
    try:
        n = int(data["n"])
        domain = ChartDomain(n, tuple(tuple(iv) for iv in data["box"]))
        sig = tuple(data.get("signature", (n, 0)))
        g_src = data["g"]
        if len(g_src) != n or any(len(r) != n for r in g_src):
            raise ConfigError(f"'g' must be an {n}x{n} array of expressions")
        g = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                a, b = parse(g_src[i][j], n), parse(g_src[j][i], n)
                if a != b:
                    raise ConfigError(f"g[{i}][{j}] and g[{j}][{i}] are different expressions")
                g[i][j] = g[j][i] = a
        phi = tuple(parse(s, n) for s in data["phi"])
        gauge = parse(data["gauge"], n) if data.get("gauge") is not None else None
        ws = WeylStructure(domain, tuple(tuple(r) for r in g), phi, sig)
    except KeyError as exc:
        raise ConfigError(f"geometry config is missing {exc}") from None
    except (ExprError, GeometryError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid geometry config: {exc}") from None
    return ws, gauge


def geometry_config(ws: WeylStructure, gauge=None) -> dict:
    """Geometry-config dict for ``ws``; derived fields are written symbolically."""
    n = ws.n
    out = {"n": n, "box": ws.domain.to_json(), "signature": list(ws.signature),
           "g": [[_as_expression(ws.g[i][j]).canonical() for j in range(n)] for i in range(n)],
           "phi": [_as_expression(c).canonical() for c in ws.phi]}
    if gauge is not None:
        out["gauge"] = _as_expression(gauge).canonical()
    return out


def _read_json(source):
    if isinstance(source, dict):
        return source
    try:
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            return json.loads(Path(source).read_text())
        return json.loads(source)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None


SHIPPED_STRUCTURES = ("flat_constant", "polar", "exact_3d", "lorentz", "sphere")


def _data_text(name: str) -> str:
    return resources.files(__package__).joinpath("data", name).read_text()


def shipped_structure(name: str) -> WeylStructure:
    if name not in SHIPPED_STRUCTURES:
        raise KeyError(f"unknown structure {name!r}; shipped: {', '.join(SHIPPED_STRUCTURES)}")
    return load_geometry_config(json.loads(_data_text(f"weyl_{name}.json")))[0]


def shipped_gauges(n: int = 2) -> list[GaugeFunction]:
    """The fixed family of test gauge functions (they use x1 and x2 only)."""
    return [GaugeFunction(parse(src, n)) for src in json.loads(_data_text("gauges.json"))]
