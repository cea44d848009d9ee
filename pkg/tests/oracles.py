"""Independent reference computations used by the tests.

Nothing here imports the package's linear algebra or geometry code: kernel
dimensions come from sympy acting on the defining equations of each
algebra, Christoffel symbols from sympy differentiation, derivatives from
finite differences.
"""

import numpy as np
import sympy as sp

# Brute-force values computed once with pb_kernel_dim and frozen here.
FROZEN_PB_KERNEL = {
    ("sl", 2): 4, ("sl", 3): 15, ("sl", 4): 36, ("sl", 5): 70,
    ("gl", 2): 6, ("gl", 3): 18, ("gl", 4): 40, ("gl", 5): 75,
    ("line_stab", 2): 2, ("line_stab", 3): 9, ("line_stab", 4): 24, ("line_stab", 5): 50,
    ("sp", 2): 4, ("sp", 4): 20,
}
FROZEN_ALGEBRA_DIM = {
    ("sl", 2): 3, ("sl", 3): 8, ("sl", 4): 15, ("sl", 5): 24,
    ("line_stab", 2): 2, ("line_stab", 3): 6, ("line_stab", 4): 12, ("line_stab", 5): 20,
    ("sp", 2): 3, ("sp", 4): 10,
}


def _defining_equations(kind, n, p=None):
    X = sp.Matrix(n, n, lambda i, j: sp.Symbol(f"x{i}{j}"))
    if kind == "so":
        eta = sp.diag(*([1] * p + [-1] * (n - p)))
        eqs = list(X.T * eta + eta * X)
    elif kind == "sl":
        eqs = [X.trace()]
    elif kind == "gl":
        eqs = []
    elif kind == "sp":
        m = n // 2
        J = sp.zeros(n)
        J[:m, m:] = sp.eye(m)
        J[m:, :m] = -sp.eye(m)
        eqs = list(X.T * J + J * X)
    elif kind == "line_stab":
        eqs = [X.trace()] + [X[i, 0] for i in range(1, n)]
    else:
        raise ValueError(kind)
    return X, eqs


def algebra_dim(kind, n, p=None):
    X, eqs = _defining_equations(kind, n, p)
    if not eqs:
        return n * n
    M = sp.Matrix([[sp.diff(e, v) for v in X] for e in eqs])
    return n * n - M.rank()


def pb_kernel_dim(kind, n, p=None):
    """dim of {A^i_jk symmetric in j,k : each A_k lies in g}."""
    syms = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                key = (i,) + tuple(sorted((j, k)))
                syms.setdefault(key, sp.Symbol("s%d_%d_%d" % key))

    def A(i, j, k):
        return syms[(i,) + tuple(sorted((j, k)))]

    X, eqs = _defining_equations(kind, n, p)
    cons = []
    for k in range(n):
        sub = {X[i, j]: A(i, j, k) for i in range(n) for j in range(n)}
        cons += [e.subs(sub) for e in eqs]
    vs = list(syms.values())
    if not cons:
        return len(vs)
    M = sp.Matrix([[sp.diff(c, v) for v in vs] for c in cons])
    return len(vs) - M.rank()


def sympy_christoffel(g_src, point):
    """Classical Gamma^i_jk of a metric given as expression strings."""
    n = len(g_src)
    xs = sp.symbols(f"x1:{n + 1}")
    g = sp.Matrix(n, n, lambda i, j: sp.sympify(g_src[i][j], locals={f"x{k + 1}": xs[k] for k in range(n)}))
    ginv = g.inv()
    subs = dict(zip(xs, point))
    out = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                expr = sum(ginv[i, l] * (sp.diff(g[l, j], xs[k]) + sp.diff(g[l, k], xs[j])
                                         - sp.diff(g[j, k], xs[l])) for l in range(n)) / 2
                out[i, j, k] = float(expr.subs(subs))
    return out


def fd_gradient(f, x, h=1e-3):
    """Fourth-order central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def fd_hessian(f, x, h=1e-3):
    """Fourth-order central differences applied to a fourth-order gradient."""
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        H[i] = (-fd_gradient(f, x + 2 * e, h) + 8 * fd_gradient(f, x + e, h)
                - 8 * fd_gradient(f, x - e, h) + fd_gradient(f, x - 2 * e, h)) / (12 * h)
    return 0.5 * (H + H.T)


def rel_close(a, b, rtol):
    a, b = np.asarray(a), np.asarray(b)
    return np.all(np.abs(a - b) <= rtol * np.maximum(1.0, np.abs(b)))


def central_gradient(f, x, h=1e-5):
    """Plain second-order central differences."""
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def random_expression(rng, n, depth=4):
    """Source text of a random expression that stays finite on [-1, 1]^n."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return f"x{rng.integers(1, n + 1)}"
        return f"{rng.integers(1, 30) / 10:g}"
    a = random_expression(rng, n, depth - 1)
    choice = rng.integers(0, 12)
    if choice < 4:
        b = random_expression(rng, n, depth - 1)
        return f"({a}) {'+-*'[choice % 3]} ({b})"
    if choice == 4:
        b = random_expression(rng, n, depth - 1)
        return f"({a})/(2 + ({b})^2)"
    return [f"sin({a})", f"cos({a})", f"exp(0.5*sin({a}))", f"log(1 + ({a})^2)",
            f"sqrt(1.5 + cos({a}))", f"-({a})^2", f"(1.5 + sin({a}))^x1"][choice - 5]
