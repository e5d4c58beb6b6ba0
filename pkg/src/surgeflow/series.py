"""Truncated complex power series around 0.

A series is a 1-D complex numpy array ``a`` representing
``a[0] + a[1] z + ... + a[n] z**n`` where coefficients beyond ``n`` are
unknown (not zero). Every operation returns a series truncated to the
shortest input order, so results are exact to that order.
"""

from __future__ import annotations

import numpy as np


def as_series(coeffs, order: int | None = None) -> np.ndarray:
    a = np.asarray(coeffs, dtype=complex).ravel()
    if order is not None:
        out = np.zeros(order + 1, dtype=complex)
        k = min(order + 1, a.size)
        out[:k] = a[:k]
        return out
    return a.copy()


def derivative(a: np.ndarray) -> np.ndarray:
    """Termwise derivative; the result has order one less than ``a``."""
    if a.size <= 1:
        return np.zeros(1, dtype=complex)
    return a[1:] * np.arange(1, a.size)


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(a.size, b.size)
    return np.convolve(a[:n], b[:n])[:n]


def reciprocal(a: np.ndarray) -> np.ndarray:
    """Series of ``1/a``; needs ``a[0] != 0``."""
    if a[0] == 0:
        raise ZeroDivisionError("series has vanishing constant term")
    n = a.size
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1 : k + 1], out[k - 1 :: -1][:k]) / a[0]
    return out


def sqrt(a: np.ndarray) -> np.ndarray:
    """Principal-branch square root; needs ``a[0] != 0``."""
    if a[0] == 0:
        raise ZeroDivisionError("series has vanishing constant term")
    n = a.size
    out = np.zeros(n, dtype=complex)
    out[0] = np.sqrt(a[0])
    for k in range(1, n):
        s = np.dot(out[1:k], out[k - 1 : 0 : -1]) if k > 1 else 0.0
        out[k] = (a[k] - s) / (2 * out[0])
    return out


def compose(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Series of ``f(g(z))``; needs ``g[0] == 0``."""
    if g[0] != 0:
        raise ValueError("inner series must vanish at 0")
    n = min(f.size, g.size)
    out = np.zeros(n, dtype=complex)
    # Horner in the series ring: f0 + g*(f1 + g*(f2 + ...))
    for c in f[:n][::-1]:
        out = multiply(out, g[:n])
        out[0] += c
    return out


def revert(f: np.ndarray) -> np.ndarray:
    """Compositional inverse ``g`` with ``f(g(w)) = w``; needs f(0)=0, f'(0)!=0."""
    if f[0] != 0 or f.size < 2 or f[1] == 0:
        raise ValueError("series is not locally invertible at 0")
    n = f.size
    g = np.zeros(n, dtype=complex)
    g[1] = 1.0 / f[1]
    ident = np.zeros(n, dtype=complex)
    ident[1] = 1.0
    df = np.append(derivative(f), 0.0)
    # Newton iteration doubles the number of correct coefficients per pass.
    for _ in range(int(np.ceil(np.log2(n))) + 2):
        fg = compose(f, g)
        g = g - multiply(fg - ident, reciprocal(compose(df, g)))
        g[0] = 0.0
    return g


def evaluate(a: np.ndarray, z):
    """Horner evaluation; ``z`` may be a scalar or an array."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for c in a[::-1]:
        out = out * z + c
    return out[()] if out.ndim == 0 else out
