import numpy as np
import pytest

from raumproblem import cartan_connection as C
from raumproblem import weyl_geometry as W
from raumproblem.chart import ChartDomain, GeometryError
from raumproblem.config import ConfigError
from raumproblem.exact_linalg import RatMatrix
from raumproblem.expr import parse
from raumproblem.lie_algebra import MatrixLieAlgebra, so

POLAR_BOX = ((0.5, 2.0), (-1.0, 1.0))


def exprs(nested, n=2):
    if isinstance(nested, str):
        return parse(nested, n)
    return [exprs(c, n) for c in nested]


def coframe(rows, box=POLAR_BOX):
    return C.CoframeField(ChartDomain(len(rows), box), exprs(rows, len(rows)))


def connection(forms, alg=None, box=POLAR_BOX):
    n = len(forms)
    return C.ConnectionForms(ChartDomain(n, box), alg or so(n, 0), exprs(forms, n))


ZERO2 = [[["0", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]
POLAR_CONN = [[["0", "0"], ["0", "-1"]], [["0", "1"], ["0", "0"]]]
X2_CONN = [[["0", "0"], ["-x2", "0"]], [["x2", "0"], ["0", "0"]]]
POLAR_G = exprs([["1", "0"], ["0", "x1^2"]])
PTS = ChartDomain(2, POLAR_BOX).random_points(20, seed=8)


def test_cartesian_coframe_zero_torsion():
    t = C.torsion(coframe([["1", "0"], ["0", "1"]]), connection(ZERO2), PTS)
    assert np.array_equal(t, np.zeros_like(t))


def test_polar_coframe_torsion():
    cf = coframe([["1", "0"], ["0", "x1"]])
    assert np.max(np.abs(C.torsion(cf, connection(POLAR_CONN), PTS))) == 0
    t = C.torsion(cf, connection(ZERO2), PTS)
    assert np.all(t[:, 1, 0, 1] == 1) and np.all(t[:, 1, 1, 0] == -1)
    assert np.all(t[:, 0] == 0)


def test_curvature_examples():
    assert np.array_equal(C.curvature(connection(ZERO2), PTS), np.zeros((20, 2, 2, 2, 2)))
    r = C.curvature(connection(X2_CONN), PTS)
    # row j=2, column i=1 holds Omega_1^2
    assert np.all(r[:, 1, 0, 1, 0] == 1) and np.all(r[:, 1, 0, 0, 1] == -1)


def test_abelian_curvature_is_exterior_derivative():
    conn = connection([[["0", "0"], ["-x2*x1", "sin(x1)"]], [["x2*x1", "-sin(x1)"], ["0", "0"]]])
    assert np.max(np.abs(C.curvature(conn, PTS) - C.exterior_derivative(conn, PTS))) < 1e-10


def test_sphere_curvature():
    cfg = C.shipped_config("sphere")
    x = cfg.domain.random_points(50, seed=3)
    r = C.curvature(cfg.connection, x)
    assert np.max(np.abs(r[:, 1, 0, 0, 1] + np.sin(x[:, 0]))) < 1e-6
    # in the coframe basis Omega_1^2 = -(1/R^2) omega^1 ^ omega^2 with R = 2
    theta = cfg.coframe.values(x)
    frame = r[:, 1, 0, 0, 1] / (theta[:, 0, 0] * theta[:, 1, 1])
    assert np.allclose(frame, -0.25, rtol=0, atol=1e-12)


def test_two_forms_exactly_antisymmetric():
    cfg = C.shipped_config("sphere")
    x = cfg.domain.random_points(30)
    r = C.curvature(cfg.connection, x)
    t = C.torsion(cfg.coframe, C.ConnectionForms(cfg.domain, so(2, 0), exprs(X2_CONN)), x)
    assert np.array_equal(r, -np.swapaxes(r, -1, -2))
    assert np.array_equal(t, -np.swapaxes(t, -1, -2))


def test_domain_mismatch():
    cf = coframe([["1", "0"], ["0", "1"]], box=((0, 1), (0, 1)))
    with pytest.raises(GeometryError, match="different charts"):
        C.torsion(cf, connection(ZERO2), PTS)


def test_lc_flat_and_polar():
    flat = C.levi_civita_connection_forms(exprs([["1", "0"], ["0", "1"]]),
                                          coframe([["1", "0"], ["0", "1"]]), PTS)
    assert np.array_equal(flat, np.zeros_like(flat))
    cf = coframe([["1", "0"], ["0", "x1"]])
    w = C.levi_civita_connection_forms(POLAR_G, cf, PTS)
    assert np.max(np.abs(w - connection(POLAR_CONN).values(PTS))) < 1e-15
    assert np.max(np.abs(C.torsion_from_values(cf, w, PTS))) < 1e-9


@pytest.mark.parametrize("name", C.SHIPPED_CONFIGS)
def test_lc_matches_shipped_forms_and_is_torsion_free(name):
    cfg = C.shipped_config(name)
    x = cfg.domain.random_points(100, seed=2)
    w = C.levi_civita_connection_forms(cfg.g, cfg.coframe, x, cfg.signature)
    assert np.max(np.abs(C.torsion_from_values(cfg.coframe, w, x))) < 1e-9
    assert np.max(np.abs(w - cfg.connection.values(x))) < 1e-12
    assert C.uniqueness_probe(cfg.g, cfg.coframe, x[:5], cfg.signature) >= 1e-4


def test_lc_not_orthonormal():
    with pytest.raises(GeometryError, match="orthonormal"):
        C.levi_civita_connection_forms(POLAR_G, coframe([["1", "0"], ["0", "1"]]), PTS)


def test_lc_split_signature_is_so11_valued():
    g = exprs([["1", "0"], ["0", "-x1^2"]])
    cf = coframe([["1", "0"], ["0", "x1"]])
    w = C.levi_civita_connection_forms(g, cf, PTS, (1, 1))
    assert np.max(C.projection_residual(so(1, 1), w)) < 1e-9
    assert np.max(np.abs(C.torsion_from_values(cf, w, PTS))) < 1e-9
    assert C.uniqueness_probe(g, cf, PTS[:5], (1, 1)) >= 1e-4


def test_lc_lorentz_chart():
    box = ((-1, 1),) * 4
    g = exprs([["exp(2*x2)", "0", "0", "0"], ["0", "-1", "0", "0"],
               ["0", "0", "-(1 + x1^2)", "0"], ["0", "0", "0", "-exp(x3)"]], 4)
    cf = C.CoframeField(ChartDomain(4, box), exprs([["exp(x2)", "0", "0", "0"], ["0", "1", "0", "0"],
                                                    ["0", "0", "sqrt(1 + x1^2)", "0"],
                                                    ["0", "0", "0", "exp(0.5*x3)"]], 4))
    x = cf.domain.random_points(100, seed=1)
    w = C.levi_civita_connection_forms(g, cf, x, (1, 3))
    assert np.max(np.abs(C.torsion_from_values(cf, w, x))) < 1e-9
    assert np.max(C.projection_residual(so(1, 3), w)) < 1e-9
    assert C.uniqueness_probe(g, cf, x[:3], (1, 3)) >= 1e-4


def test_valuedness_verdicts():
    conn = connection(X2_CONN)
    assert C.check_algebra_valued(conn).passed
    span_i = MatrixLieAlgebra("span{I}", 2, (RatMatrix.identity(2),))
    bad = C.ConnectionForms(conn.domain, span_i, conn.forms)
    verdict = C.check_algebra_valued(bad)
    assert not verdict.passed
    worst = np.asarray(verdict.worst_point)
    norm = np.linalg.norm(conn.values(worst)[:, :, verdict.worst_direction])
    assert abs(verdict.worst_residual - norm) < 1e-12


@pytest.mark.parametrize("name", ["polar", "sphere"])
def test_frame_curvature_matches_weyl_riemann(name):
    cfg = C.shipped_config(name)
    x = cfg.domain.random_points(40, seed=6)
    r = C.curvature_to_coordinates(C.curvature(cfg.connection, x), cfg.coframe.values(x))
    g_src = [[str(cfg.g[i][j]) for j in range(2)] for i in range(2)]
    ws = W.load_geometry_config({"n": 2, "box": cfg.domain.to_json(), "g": g_src, "phi": ["0", "0"]})[0]
    assert np.max(np.abs(r - W.riemann_tensor(ws, x))) < 1e-6


def test_probe_family_layout():
    fam = C.probe_family(so(3, 0))
    assert fam.shape == (9, 3, 3, 3)
    assert np.count_nonzero(fam[4][:, :, [0, 2]]) == 0


def test_cartan_config_errors():
    base = {"n": 2, "box": [[0, 1], [0, 1]], "algebra": "so:2,0",
            "coframe": [["1", "0"], ["0", "1"]], "connection": ZERO2}
    cfg = C.load_cartan_config(base)
    assert cfg.signature == (2, 0) and cfg.g is None
    inline = C.load_cartan_config({**base, "algebra": so(2, 0).to_json()})
    assert inline.connection.algebra == so(2, 0)
    with pytest.raises(ConfigError):
        C.load_cartan_config({**base, "algebra": "so:3,0"})
    with pytest.raises(ConfigError):
        C.load_cartan_config({**base, "connection": [["0"]]})
    with pytest.raises(ConfigError, match="missing"):
        C.load_cartan_config({k: v for k, v in base.items() if k != "coframe"})
