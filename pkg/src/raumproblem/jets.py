"""Second-order forward-mode jets (value, gradient, Hessian), batched.

A jet over ``n`` variables carries arrays of shapes ``B``, ``B + (n,)`` and
``B + (n, n)`` for an arbitrary batch shape ``B``, so one pass evaluates a
field at many points.  Every operation builds the Hessian from symmetric
pieces, so it is symmetric bit for bit.
"""

from __future__ import annotations

import numpy as np


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _sym_outer(a, b):
    return _outer(a, b) + _outer(b, a)


class Jet2:
    __slots__ = ("value", "gradient", "hessian")

    def __init__(self, value, gradient, hessian):
        self.value = np.asarray(value, dtype=float)
        self.gradient = np.asarray(gradient, dtype=float)
        self.hessian = np.asarray(hessian, dtype=float)

    @property
    def n(self) -> int:
        return self.gradient.shape[-1]

    @classmethod
    def constant(cls, c, n: int, batch=()) -> "Jet2":
        v = np.broadcast_to(np.asarray(c, dtype=float), batch).copy()
        return cls(v, np.zeros(batch + (n,)), np.zeros(batch + (n, n)))

    @classmethod
    def variable(cls, x: np.ndarray, i: int) -> "Jet2":
        """Jet of the coordinate x_i (0-based) at points ``x`` of shape B + (n,)."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        batch = x.shape[:-1]
        g = np.zeros(batch + (n,))
        g[..., i] = 1.0
        return cls(x[..., i].copy(), g, np.zeros(batch + (n, n)))

    def __neg__(self):
        return Jet2(-self.value, -self.gradient, -self.hessian)

    def __add__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.value + other, self.gradient, self.hessian)
        return Jet2(self.value + other.value, self.gradient + other.gradient,
                    self.hessian + other.hessian)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.value * other, self.gradient * other, self.hessian * other)
        u, v = self.value, other.value
        return Jet2(u * v,
                    self.gradient * v[..., None] + u[..., None] * other.gradient,
                    self.hessian * v[..., None, None] + u[..., None, None] * other.hessian
                    + _sym_outer(self.gradient, other.gradient))

    __rmul__ = __mul__

    def chain(self, f0, f1, f2) -> "Jet2":
        """Compose with a scalar function given f, f', f'' at ``self.value``."""
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        return Jet2(f0, f1[..., None] * self.gradient,
                    f1[..., None, None] * self.hessian
                    + f2[..., None, None] * _outer(self.gradient, self.gradient))

    def reciprocal(self) -> "Jet2":
        u = self.value
        return self.chain(1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def powi(self, k: int) -> "Jet2":
        u = self.value
        if k == 0:
            return Jet2.constant(1.0, self.n, u.shape)
        f1 = k * u ** (k - 1) if k != 1 else np.ones_like(u)
        if k in (0, 1):
            f2 = np.zeros_like(u)
        elif k == 2:
            f2 = np.full_like(u, 2.0)
        else:
            f2 = k * (k - 1) * u ** (k - 2)
        return self.chain(u**k, f1, f2)

    def powf(self, c: float) -> "Jet2":
        u = self.value
        return self.chain(u**c, c * u ** (c - 1), c * (c - 1) * u ** (c - 2))

    def __getitem__(self, idx) -> "Jet2":
        return Jet2(self.value[idx], self.gradient[idx], self.hessian[idx])


def exp(u: Jet2) -> Jet2:
    e = np.exp(u.value)
    return u.chain(e, e, e)


def log(u: Jet2) -> Jet2:
    v = u.value
    return u.chain(np.log(v), 1.0 / v, -1.0 / v**2)


def sin(u: Jet2) -> Jet2:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.chain(s, c, -s)


def cos(u: Jet2) -> Jet2:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.chain(c, -s, -c)


def sqrt(u: Jet2) -> Jet2:
    r = np.sqrt(u.value)
    return u.chain(r, 0.5 / r, -0.25 / (r * u.value))
