"""Small numerical kernels shared by the breather and period modules.

The functions here are written to stay accurate when the breather energy is
very close to its minimum, where the naive formulas lose every significant
digit to cancellation.
"""

from functools import lru_cache

import numpy as np

_SERIES_CUT = 0.1
_SERIES_TERMS = 18


def xm_log1p(u):
    """Return ``u - log1p(u)`` for ``u > -1`` without cancellation near 0."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < _SERIES_CUT
    us = u[small]
    acc = np.zeros_like(us)
    for k in range(_SERIES_TERMS, 1, -1):
        acc = (-1.0) ** k / k + us * acc
    out[small] = us * us * acc
    ub = u[~small]
    out[~small] = ub - np.log1p(ub)
    return out if out.ndim else float(out)


def xm_log1p_over_sq(u):
    """Return ``(u - log1p(u)) / u**2``, equal to 1/2 at ``u = 0``."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < _SERIES_CUT
    us = u[small]
    acc = np.zeros_like(us)
    for k in range(_SERIES_TERMS, 1, -1):
        acc = (-1.0) ** k / k + us * acc
    out[small] = acc
    ub = u[~small]
    out[~small] = (ub - np.log1p(ub)) / (ub * ub)
    return out if out.ndim else float(out)


def expm1_minus(x):
    """Return ``expm1(x) - x`` accurately for small ``|x|``."""
    x = float(x)
    if abs(x) < _SERIES_CUT:
        term = x * x / 2.0
        acc = term
        for k in range(3, _SERIES_TERMS + 3):
            term *= x / k
            acc += term
        return acc
    return float(np.expm1(x) - x)


def bracketed_newton(f, fprime, lo, hi, x0, tol=1e-15, max_iter=200):
    """Newton iteration kept inside ``[lo, hi]``, falling back to bisection.

    ``f`` must change sign on the bracket. Returns the root estimate.
    """
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    sign_lo = np.sign(flo)
    if np.sign(fhi) == sign_lo:
        raise ValueError(f"f does not change sign on [{lo!r}, {hi!r}]")
    x = min(max(x0, lo), hi)
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0.0:
            return x
        if np.sign(fx) == sign_lo:
            lo = x
        else:
            hi = x
        d = fprime(x)
        step_ok = False
        if d != 0.0 and np.isfinite(d):
            x_new = x - fx / d
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, abs(x_new)) or hi - lo <= tol * max(1.0, abs(hi)):
            return x_new
        x = x_new
    return x


@lru_cache(maxsize=16)
def gauss_legendre(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def adaptive_gauss_legendre(f, a, b, rtol=1e-13, atol=0.0, order=20, max_panels=4000):
    """Integrate a vectorized ``f`` over ``[a, b]`` by panel bisection.

    Each panel is accepted when the ``order`` and ``2*order`` point rules agree
    to within its share of the tolerance. Returns ``(value, error_estimate)``.

    Raises RuntimeError when the panel budget is exhausted.
    """
    x1, w1 = gauss_legendre(order)
    x2, w2 = gauss_legendre(2 * order)

    def rules(lo, hi):
        h = hi - lo
        return h * np.dot(w1, f(lo + h * x1)), h * np.dot(w2, f(lo + h * x2))

    coarse, fine = rules(a, b)
    scale = abs(fine)
    total, err = 0.0, 0.0
    stack = [(a, b, coarse, fine)]
    panels = 0
    while stack:
        lo, hi, q1, q2 = stack.pop()
        panels += 1
        if panels > max_panels:
            raise RuntimeError(
                f"adaptive quadrature did not converge on [{a}, {b}] "
                f"(partial value {total + q2!r})"
            )
        share = (hi - lo) / (b - a)
        # the 1e3*eps term is the roundoff floor of a single panel
        tol = max(max(atol, rtol * scale) * share, 1e3 * np.finfo(float).eps * abs(q2))
        if abs(q2 - q1) <= tol or hi - lo < 1e-14 * (b - a):
            total += q2
            err += abs(q2 - q1)
            continue
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid) + rules(lo, mid))
        stack.append((mid, hi) + rules(mid, hi))
    return total, err
