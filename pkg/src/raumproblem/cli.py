"""Command-line entry point.

Exit codes: 0 every check passed, 1 some check failed, 2 usage error,
3 configuration could not be read or parsed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import cartan_connection as cartan
from . import weyl_geometry as weyl
from .chart import GeometryError
from .config import ENV_VAR, ConfigError, Tolerances
from .expr import ExprError, parse
from .lie_algebra import AlgebraError, parse_algebra_spec, so
from .report import Check, RunReport
from .space_problem import CatalogError, default_catalog, pos_verdict, verify_catalog

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3
SAMPLE_POINTS = 100
SAMPLE_SEED = 0


class UsageError(Exception):
    pass


def _checks_payload(kind: str, tol: Tolerances, checks: list[Check], **extra) -> tuple[dict, list]:
    payload = {"kind": kind, "tolerances": tol.to_json(), **extra,
               "checks": [c.to_json() for c in checks]}
    return payload, [c.name for c in checks if not c.passed]


def _max(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def cmd_pos_verify(args, tol):
    try:
        alg = parse_algebra_spec(args.algebra)
    except AlgebraError as exc:
        raise UsageError(str(exc)) from None
    v = pos_verdict(alg)
    failed = [name for name, ok in (("cond1", v.cond1_dimension), ("cond2", v.cond2_traceless),
                                    ("cond3", v.cond3_kernel_dim == 0), ("PA", v.PA), ("PB", v.PB))
              if not ok]
    return {"kind": "pos_verdict", "verdict": v.to_json()}, failed


def cmd_pos_catalog(args, tol):
    try:
        cat = default_catalog(args.n)
    except CatalogError as exc:
        raise UsageError(str(exc)) from None
    res = verify_catalog(args.n, cat, jobs=args.jobs)
    failed = [] if res.matches else ["survivors_are_orthogonal_family"]
    return {"kind": "pos_catalog", "catalog": res.to_json()}, failed


def _loop_for(ws):
    lo, hi = ws.domain.lower, ws.domain.upper
    corner = lo + 0.3 * (hi - lo)
    sides = tuple(0.2 * (hi - lo)[:2])
    return corner, sides


def weyl_checks(ws, tol: Tolerances, gauge=None) -> list[Check]:
    ws.check_metric()
    pts = ws.domain.random_points(SAMPLE_POINTS, SAMPLE_SEED)
    gamma = weyl.compatible_connection(ws, pts)
    f = weyl.length_curvature(ws, pts)
    checks = [
        Check("compatibility_residual", _max(weyl.compatibility_residual(ws, pts, gamma)), tol.residual),
        Check("gamma_symmetry", _max(gamma - np.swapaxes(gamma, -1, -2)), 0.0, "=="),
        Check("f_antisymmetry", _max(f + np.swapaxes(f, -1, -2)), 0.0, "=="),
    ]
    corner, sides = _loop_for(ws)
    loop = weyl.rectangle_loop(corner, sides)
    log_ratio = np.log(weyl.transport_length(ws, loop, 1.0))
    fmax = _max(weyl.length_curvature(ws, ws.domain.grid()))
    if fmax < tol.curvature_zero:
        checks.append(Check("loop_holonomy", abs(float(np.expm1(log_ratio))), tol.holonomy))
        gf = weyl.riemannian_gauge(ws, ws.domain.center, tol)
        reduced = weyl.gauge_transform(ws, gf)
        checks.append(Check("riemannian_gauge_phi", _max(weyl.phi_jets(reduced, ws.domain.grid())[0]),
                            tol.gauge_reduction))
    else:
        flux = weyl.curvature_flux(ws, corner, sides)
        checks.append(Check("stokes", abs(float(log_ratio + flux)), tol.stokes))
    if gauge is not None:
        checks += gauge_checks(ws, weyl.gauge_transform(ws, gauge), tol, pts)
    return checks


def gauge_checks(ws, new, tol: Tolerances, pts) -> list[Check]:
    return [
        Check("gauge_compatibility_residual", _max(weyl.compatibility_residual(new, pts)), tol.residual),
        Check("gamma_gauge_invariance", _max(weyl.compatible_connection(new, pts)
                                             - weyl.compatible_connection(ws, pts)), tol.gauge_invariance),
        Check("f_gauge_invariance", _max(weyl.length_curvature(new, pts)
                                         - weyl.length_curvature(ws, pts)), tol.gauge_invariance),
    ]


def cmd_weyl_check(args, tol):
    ws, gauge = weyl.load_geometry_config(_read_config(args.config))
    checks = weyl_checks(ws, tol, gauge)
    return _checks_payload("weyl_check", tol, checks, structure=weyl.geometry_config(ws, gauge))


def cmd_weyl_gauge(args, tol):
    ws, _ = weyl.load_geometry_config(_read_config(args.config))
    try:
        omega = parse(args.omega, ws.n)
    except ExprError as exc:
        raise UsageError(f"--omega: {exc}") from None
    new = weyl.gauge_transform(ws, omega)
    pts = ws.domain.random_points(SAMPLE_POINTS, SAMPLE_SEED)
    checks = gauge_checks(ws, new, tol, pts)
    return _checks_payload("weyl_gauge", tol, checks, omega=omega.canonical(),
                           transformed=weyl.geometry_config(new))


def cmd_cartan_check(args, tol):
    cfg = cartan.load_cartan_config(_read_config(args.config))
    cfg.coframe.check_invertible()
    pts = cfg.domain.random_points(SAMPLE_POINTS, SAMPLE_SEED)
    t = cartan.torsion(cfg.coframe, cfg.connection, pts)
    r = cartan.curvature(cfg.connection, pts)
    val = cartan.check_algebra_valued(cfg.connection, tol)
    checks = [
        Check("algebra_valued", val.worst_residual, tol.membership),
        Check("two_form_antisymmetry", max(_max(t + np.swapaxes(t, -1, -2)),
                                           _max(r + np.swapaxes(r, -1, -2))), 0.0, "=="),
    ]
    center = cfg.domain.center
    return _checks_payload("cartan_check", tol, checks, algebra=cfg.connection.algebra.name,
                           max_torsion=_max(t), max_curvature=_max(r),
                           valuedness=val.to_json(),
                           torsion_at_center=cartan.torsion(cfg.coframe, cfg.connection, center).tolist(),
                           curvature_at_center=cartan.curvature(cfg.connection, center).tolist())


def cmd_cartan_lc(args, tol):
    cfg = cartan.load_cartan_config(_read_config(args.config))
    if cfg.g is None:
        raise ConfigError("cartan lc needs a metric 'g' in the config")
    sig = cfg.signature or (cfg.domain.n, 0)
    pts = cfg.domain.random_points(SAMPLE_POINTS, SAMPLE_SEED)
    w = cartan.levi_civita_connection_forms(cfg.g, cfg.coframe, pts, sig, tol)
    probe = cartan.uniqueness_probe(cfg.g, cfg.coframe, pts[:10], sig)
    checks = [
        Check("lc_torsion", _max(cartan.torsion_from_values(cfg.coframe, w, pts)), tol.residual),
        Check("lc_algebra_valued", float(np.max(cartan.projection_residual(so(*sig), w))), tol.membership),
        Check("uniqueness_probe", probe, 1e-4, ">="),
    ]
    center = cfg.domain.center
    forms = cartan.levi_civita_connection_forms(cfg.g, cfg.coframe, center, sig, tol)
    return _checks_payload("cartan_lc", tol, checks, signature=list(sig),
                           forms_at_center=forms.tolist())


def _read_config(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="raumproblem", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="group", required=True)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="print the JSON report on stdout")
        sp.add_argument("--out", help="also write the JSON report to this file")

    pos = sub.add_parser("pos", help="space-problem verdicts").add_subparsers(dest="cmd", required=True)
    v = pos.add_parser("verify", help="verdict for one algebra")
    v.add_argument("--algebra", required=True, help="so:p,q | sl:n | gl:n | sp:2m | line:n")
    common(v)
    v.set_defaults(func=cmd_pos_verify)
    c = pos.add_parser("catalog", help="sweep the default catalog for one n")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--jobs", type=int, default=None, help="worker processes")
    common(c)
    c.set_defaults(func=cmd_pos_catalog)

    w = sub.add_parser("weyl", help="Weyl gauge geometry").add_subparsers(dest="cmd", required=True)
    wc = w.add_parser("check", help="residual and invariant table for a structure")
    wc.add_argument("--config", required=True)
    common(wc)
    wc.set_defaults(func=cmd_weyl_check)
    wg = w.add_parser("gauge", help="apply a gauge function")
    wg.add_argument("--config", required=True)
    wg.add_argument("--omega", required=True, help="positive expression in x1..xn")
    common(wg)
    wg.set_defaults(func=cmd_weyl_gauge)

    ca = sub.add_parser("cartan", help="Cartan connections").add_subparsers(dest="cmd", required=True)
    cc = ca.add_parser("check", help="torsion, curvature and algebra-valuedness")
    cc.add_argument("--config", required=True)
    common(cc)
    cc.set_defaults(func=cmd_cartan_check)
    cl = ca.add_parser("lc", help="Levi-Civita forms and their torsion")
    cl.add_argument("--config", required=True)
    common(cl)
    cl.set_defaults(func=cmd_cartan_lc)
    return p


def _human(report: RunReport) -> str:
    p = report.payload
    lines = [f"{' '.join(report.command)}: {'PASS' if report.passed else 'FAIL'}"]
    if p["kind"] == "pos_verdict":
        v = p["verdict"]
        lines.append(f"  {v['algebra']}: dim={v['dim']} cond1={v['cond1']} cond2={v['cond2']} "
                     f"cond3_kernel_dim={v['cond3_kernel_dim']} PA={v['PA']} PB={v['PB']} "
                     f"delta rank/nullity={v['delta_rank']}/{v['delta_nullity']}")
    elif p["kind"] == "pos_catalog":
        cat = p["catalog"]
        for v in cat["verdicts"]:
            lines.append(f"  {v['algebra']:<14} dim={v['dim']:<3} cond3_kernel_dim={v['cond3_kernel_dim']:<3} "
                         f"PA={v['PA']!s:<5} PB={v['PB']}")
        lines.append(f"  survivors: {', '.join(cat['survivors']) or '(none)'}")
    elif "error" in p:
        lines.append(f"  error: {p['error']}")
    for c in p.get("checks", []):
        val = "n/a" if c["value"] is None else f"{c['value']:.3e}"
        lines.append(f"  {c['name']:<30} {val} {c['comparison']} {c['threshold']}  "
                     f"{'ok' if c['passed'] else 'FAIL'}")
    return "\n".join(lines)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        tol = Tolerances.from_env()
    except ConfigError as exc:
        print(f"error: {ENV_VAR}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        payload, failed = args.func(args, tol)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeometryError, ExprError) as exc:
        kind = f"{args.group}_{args.cmd}".replace("pos_verify", "pos_verdict")
        payload, failed = {"kind": kind, "error": str(exc)}, ["error"]
    report = RunReport(["raumproblem"] + argv, payload, failed)
    text = report.dumps()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text if args.json else _human(report))
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
