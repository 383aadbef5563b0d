"""One-dimensional golden-section search."""

from __future__ import annotations

import math

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(fun, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Minimize a unimodal ``fun`` on [a, b]; returns (x, fun(x))."""
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def golden_section_max(fun, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    x, fx = golden_section_min(lambda u: -fun(u), a, b, tol, max_iter)
    return x, -fx
