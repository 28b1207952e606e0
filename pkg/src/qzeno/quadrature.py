"""Adaptive panel quadrature on a finite interval.

The integration range is first cut into panels narrow enough to resolve the
integrand's oscillation; each panel is integrated with fixed-order
Gauss-Legendre, and the difference against the two-half estimate decides
whether it is accepted or bisected again. All panels of one round are
evaluated in a single vectorised call.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError

_ORDER = 16
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_ORDER)
_NOISE = 64 * np.finfo(float).eps


def _gauss(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    return half * (f(x) @ _WEIGHTS)


def integrate_panels(f, edges, rel_tol=1e-12, abs_tol=1e-300, max_rounds=40, max_panels=2_000_000):
    """Integrate ``f`` over ``[edges[0], edges[-1]]`` starting from the given panels.

    ``f`` must accept an ndarray and return an ndarray of the same shape.
    Raises :class:`NumericalError` if some panels still miss their share of the
    tolerance after ``max_rounds`` bisections.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    length = edges[-1] - edges[0]
    accepted: list[float] = []
    scale = None
    for _ in range(max_rounds):
        mid = 0.5 * (a + b)
        whole = _gauss(f, a, b)
        halves = _gauss(f, a, mid) + _gauss(f, mid, b)
        if not np.all(np.isfinite(halves)):
            bad = np.flatnonzero(~np.isfinite(halves))[0]
            raise NumericalError(
                f"non-finite integrand on panel [{a[bad]!r}, {b[bad]!r}]"
            )
        err = np.abs(whole - halves)
        if scale is None:
            # magnitude used for the relative target, fixed after the first pass
            scale = max(abs(math.fsum(halves)), float(np.sum(np.abs(halves))) * 1e-3)
        tol = max(abs_tol, rel_tol * scale) * (b - a) / length
        # differences at the rounding level carry no information
        floor = _NOISE * (np.abs(whole) + np.abs(halves))
        ok = err <= np.maximum(tol, floor)
        accepted.extend(halves[ok].tolist())
        if ok.all():
            return math.fsum(accepted)
        a, b, mid = a[~ok], b[~ok], mid[~ok]
        if 2 * a.size > max_panels:
            break
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
        order = np.argsort(a, kind="stable")
        a, b = a[order], b[order]
    raise NumericalError(
        f"quadrature did not converge: "
        f"{a.size} panels unresolved, worst near [{a[0]!r}, {b[0]!r}], "
        f"target relative tolerance {rel_tol:g}"
    )
