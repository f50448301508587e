"""Truncated Taylor series in (t, x_1..x_m) around a base point.

Monomials t^k x^alpha are weighted 2k + |alpha| (t counts twice, matching the
scaling of a Schroedinger equation) and everything above ``weight`` is
dropped. With weight 4 the series carries exactly the jet needed by a second
prolongation: psi_tt, psi_txx and fourth spatial derivatives.

Coefficients are Taylor coefficients, not derivatives: the derivative
d_t^k d^alpha f at the base point is coeff * k! * alpha!.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product

import numpy as np


class SeriesSpace:
    def __init__(self, m: int, weight: int = 4):
        self.m = m
        self.weight = weight
        monos = []
        for k in range(weight // 2 + 1):
            for alpha in _x_monomials(m, weight - 2 * k):
                monos.append((k,) + alpha)
        monos.sort(key=lambda e: (2 * e[0] + sum(e[1:]), e))
        self.monos = monos
        self.index = {e: i for i, e in enumerate(monos)}
        self.size = len(monos)
        self.weights = np.array([2 * e[0] + sum(e[1:]) for e in monos])
        P, Q, T = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if self.weights[i] + self.weights[j] > weight:
                    continue
                P.append(i)
                Q.append(j)
                T.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self._P = np.array(P)
        self._Q = np.array(Q)
        self._T = np.array(T)
        # derivative maps: d/dvar sends coefficient at e to e - 1_var with factor e_var
        self._deriv = []
        for v in range(m + 1):
            src, dst, fac = [], [], []
            for i, e in enumerate(monos):
                if e[v]:
                    f = list(e)
                    f[v] -= 1
                    src.append(i)
                    dst.append(self.index[tuple(f)])
                    fac.append(e[v])
            self._deriv.append((np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac, dtype=float)))
        src, dst, fac = [], [], []
        for i, e in enumerate(monos):
            f = list(e)
            f[0] += 1
            f = tuple(f)
            if f in self.index:
                src.append(i)
                dst.append(self.index[f])
                fac.append(1.0 / f[0])
        self._tint = (np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac))
        self.derivative_factor = np.array([math.prod(math.factorial(a) for a in e) for e in monos], dtype=float)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        w = a[self._P] * b[self._Q]
        return (np.bincount(self._T, w.real, self.size) + 1j * np.bincount(self._T, w.imag, self.size))

    def deriv(self, a: np.ndarray, var: int) -> np.ndarray:
        src, dst, fac = self._deriv[var]
        out = np.zeros(self.size, dtype=complex)
        out[dst] = a[src] * fac
        return out

    def t_integral(self, a: np.ndarray) -> np.ndarray:
        """Antiderivative in t vanishing at t = 0, truncated."""
        src, dst, fac = self._tint
        out = np.zeros(self.size, dtype=complex)
        out[dst] = a[src] * fac
        return out

    def constant(self, c) -> "Series":
        arr = np.zeros(self.size, dtype=complex)
        arr[0] = c
        return Series(self, arr)

    def variable(self, var: int, value) -> "Series":
        """Coordinate ``var`` (0 = t) expanded about its base value."""
        arr = np.zeros(self.size, dtype=complex)
        arr[0] = value
        e = [0] * (self.m + 1)
        e[var] = 1
        arr[self.index[tuple(e)]] = 1.0
        return Series(self, arr)

    def from_derivatives(self, values: dict) -> "Series":
        """Series from derivative values {exponent tuple: d^e f}."""
        arr = np.zeros(self.size, dtype=complex)
        for e, v in values.items():
            i = self.index[tuple(e)]
            arr[i] = v / self.derivative_factor[i]
        return Series(self, arr)


@lru_cache(maxsize=None)
def series_space(m: int, weight: int = 4) -> SeriesSpace:
    return SeriesSpace(m, weight)


def _x_monomials(m: int, max_degree: int):
    out = []
    for alpha in product(range(max_degree + 1), repeat=m):
        if sum(alpha) <= max_degree:
            out.append(alpha)
    return out


class Series:
    __slots__ = ("space", "c")
    __array_priority__ = 100

    def __init__(self, space: SeriesSpace, coeffs: np.ndarray):
        self.space = space
        self.c = coeffs

    # helpers
    def _lift(self, other):
        if isinstance(other, Series):
            return other.c
        out = np.zeros(self.space.size, dtype=complex)
        out[0] = other
        return out

    @property
    def value(self) -> complex:
        return complex(self.c[0])

    def derivative(self, orders) -> complex:
        """d^orders at the base point; orders = (k_t, a_1..a_m)."""
        i = self.space.index[tuple(orders)]
        return complex(self.c[i] * self.space.derivative_factor[i])

    def __add__(self, other):
        return Series(self.space, self.c + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Series(self.space, self.c - self._lift(other))

    def __rsub__(self, other):
        return Series(self.space, self._lift(other) - self.c)

    def __neg__(self):
        return Series(self.space, -self.c)

    def __mul__(self, other):
        if isinstance(other, Series):
            return Series(self.space, self.space.mul(self.c, other.c))
        return Series(self.space, self.c * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Series):
            return self * other.reciprocal()
        return Series(self.space, self.c / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def conj(self) -> "Series":
        # the expansion variables are real, so conjugation acts on coefficients
        return Series(self.space, np.conj(self.c))

    def d(self, var: int) -> "Series":
        return Series(self.space, self.space.deriv(self.c, var))

    def t_integral(self) -> "Series":
        return Series(self.space, self.space.t_integral(self.c))

    def compose(self, derivs) -> "Series":
        """f(self) given derivs[k] = f^(k)(base value), k = 0..weight."""
        delta = self.c.copy()
        delta[0] = 0.0
        out = np.zeros(self.space.size, dtype=complex)
        out[0] = derivs[0]
        power = None
        fact = 1.0
        for k in range(1, self.space.weight + 1):
            power = delta if power is None else self.space.mul(power, delta)
            fact *= k
            if not np.any(power):
                break
            out = out + power * (derivs[k] / fact)
        return Series(self.space, out)

    def reciprocal(self) -> "Series":
        return self.power(-1.0)

    def power(self, p: float) -> "Series":
        if float(p).is_integer() and p >= 0:
            return self.int_power(int(p))
        s0 = complex(self.c[0])
        if s0 == 0:
            raise ZeroDivisionError("non-integer or negative power of a series with zero base value")
        derivs = []
        coef = 1.0
        for k in range(self.space.weight + 1):
            derivs.append(coef * s0 ** (p - k))
            coef *= p - k
        return self.compose(derivs)

    def int_power(self, k: int) -> "Series":
        out = self.space.constant(1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def exp(self) -> "Series":
        v = np.exp(complex(self.c[0]))
        return self.compose([v] * (self.space.weight + 1))

    def log(self) -> "Series":
        s0 = complex(self.c[0])
        if s0 == 0:
            raise ZeroDivisionError("log of a series with zero base value")
        derivs = [np.log(s0)]
        for k in range(1, self.space.weight + 1):
            derivs.append((-1) ** (k - 1) * math.factorial(k - 1) / s0 ** k)
        return self.compose(derivs)

    def sin(self) -> "Series":
        s0 = complex(self.c[0])
        cyc = [np.sin(s0), np.cos(s0), -np.sin(s0), -np.cos(s0)]
        return self.compose([cyc[k % 4] for k in range(self.space.weight + 1)])

    def cos(self) -> "Series":
        s0 = complex(self.c[0])
        cyc = [np.cos(s0), -np.sin(s0), -np.cos(s0), np.sin(s0)]
        return self.compose([cyc[k % 4] for k in range(self.space.weight + 1)])

    def abs_real(self) -> "Series":
        """|s| for a real-valued series with nonzero base value."""
        s0 = complex(self.c[0])
        if abs(s0.imag) > 1e-9 * max(1.0, abs(s0)):
            raise ValueError("abs() needs a real-valued argument")
        if s0.real == 0:
            raise ZeroDivisionError("abs() at a zero of its argument")
        return self if s0.real > 0 else -self

    def __repr__(self):
        return f"Series(value={self.value:.6g}, terms={int(np.count_nonzero(self.c))})"


__all__ = ["Series", "SeriesSpace", "series_space"]
