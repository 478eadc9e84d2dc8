"""Period of the normalized breather width.

The period is ``T = 2 * int_{g-}^{g+} dx / sqrt(E - 1/x**2 - 2 ln x)``. The
integral is split at ``x = 1``; each half is mapped to ``[0, 1]`` through
``y = x**2`` and an affine change of variable, which leaves a single
inverse-square-root singularity at the far endpoint. The final substitution
``x = 1 - s**2`` removes it, and the smooth integrand is handled by adaptive
Gauss-Legendre quadrature. The integrands below take ``q = 1 - s`` as the
variable so that ``x = q (2 - q)`` keeps full precision where the upper half
is sharply peaked (``x`` of order ``1/delta_plus``).
"""

import csv
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
import math

import numpy as np
from scipy.integrate import solve_ivp

from ._numerics import adaptive_gauss_legendre, xm_log1p_over_sq
from .breather import (
    BreatherParam,
    _as_level,
    _rhs,
    energy_of,
    turning_points,
)

SMALL_OSCILLATION_PERIOD = math.sqrt(2.0) * math.pi
DEGENERATE_EXCESS = 1e-10


class PeriodError(RuntimeError):
    pass


@dataclass(frozen=True)
class PeriodResult:
    period: float
    method: str  # "quadrature", "ode_oracle", "asymptotic" or "limit"
    est_error: float = 0.0
    lower_half: float = math.nan
    upper_half: float = math.nan


def _upper_integrand(delta):
    # x = 1 - s^2, s = 1 - q on the [1, gamma_plus] half
    ratio = delta / (1.0 + delta)

    def f(q):
        s2 = (1.0 - q) ** 2
        x = q * (2.0 - q)
        p = 1.0 + delta * x
        v = ratio * s2
        # phi(-v)/v with phi(u) = u - log1p(u); 1 - v = p / (1 + delta) exactly
        vs = np.maximum(v, 0.1)
        phi = np.where(v < 0.1, v * xm_log1p_over_sq(-np.minimum(v, 0.1)),
                       (np.log1p(delta) - np.log1p(delta * x) - vs) / vs)
        d = ratio * (phi + delta * x / p)
        return delta / np.sqrt(p * d)

    return f


def _lower_integrand(delta):
    # z = 1 - s^2, s = 1 - q on the [gamma_minus, 1] half
    def f(q):
        s2 = (1.0 - q) ** 2
        z = q * (2.0 - q)
        p = 1.0 + delta * z
        w = delta * s2 / p
        d = (delta / p) * (delta * z + w * xm_log1p_over_sq(w))
        return delta / (p * np.sqrt(p * d))

    return f


def _breakpoints(delta):
    # the integrands vary on the scale q ~ 1/delta; grade the panels geometrically
    edges = [0.0]
    q = 1.0 / delta
    while q < 0.5:
        edges.append(q)
        q *= 16.0
    edges.append(1.0)
    return edges


def period_quadrature(level, rtol=1e-13):
    """Period of the normalized width at energy ``level`` by quadrature."""
    level = _as_level(level)
    if level.excess <= 0.0:
        raise ValueError("period quadrature requires E > 1")
    if level.excess < DEGENERATE_EXCESS:
        return PeriodResult(SMALL_OSCILLATION_PERIOD, "limit", 1e-5)
    tp = turning_points(level)
    halves = []
    errs = []
    for f, delta in ((_lower_integrand(tp.delta_minus), tp.delta_minus),
                     (_upper_integrand(tp.delta_plus), tp.delta_plus)):
        val, err = 0.0, 0.0
        edges = _breakpoints(delta)
        for a, b in zip(edges[:-1], edges[1:]):
            try:
                # half periods are O(1) or larger, so rtol doubles as an absolute floor
                v, e = adaptive_gauss_legendre(f, a, b, rtol=rtol, atol=rtol)
            except RuntimeError as exc:
                raise PeriodError(f"quadrature failed at E={level.e_gamma!r}: {exc}") from exc
            val += v
            err += e
        halves.append(val)
        errs.append(err)
    lower, upper = halves
    if not (math.isfinite(lower) and math.isfinite(upper)):
        raise PeriodError(f"non-finite half periods {lower!r}, {upper!r}")
    return PeriodResult(2.0 * (lower + upper), "quadrature", 2.0 * sum(errs),
                        2.0 * lower, 2.0 * upper)


def period_asymptotic(level):
    """Large-energy equivalent ``sqrt(2 pi) exp(E/2)``.

    Only valid as ``E -> inf``; at ``E = 1`` it gives about 4.133 while the
    true limit is ``sqrt(2) pi``.
    """
    level = _as_level(level)
    return PeriodResult(math.sqrt(2.0 * math.pi) * math.exp(level.e_gamma / 2.0), "asymptotic")


def period_asymptotic_alpha(param):
    """Physical form ``sqrt(pi/lam) alpha_r exp(alpha_i**2/(4 lam) + 1/(4 lam alpha_r**2))``."""
    lam = param.lam
    value = (math.sqrt(math.pi / lam) * param.alpha_r
             * math.exp(param.alpha_i ** 2 / (4.0 * lam) + 1.0 / (4.0 * lam * param.alpha_r ** 2)))
    return PeriodResult(value, "asymptotic")


def period_ode_oracle(gamma, rtol=1e-13, atol=1e-14):
    """Period measured by integrating the width ODE.

    The section is ``tau_dot = 0`` crossed downward, which happens once per
    period at the upper turning point; the period is the time between two
    consecutive crossings.
    """
    gamma = complex(gamma.gamma if isinstance(gamma, BreatherParam) else gamma)
    level = energy_of(gamma)
    if level.excess == 0.0:
        return PeriodResult(SMALL_OSCILLATION_PERIOD, "limit", 0.0)

    def section(t, y):
        return y[1]

    section.direction = -1
    section.terminal = 3
    horizon = 10.0 * max(period_asymptotic(level).period, SMALL_OSCILLATION_PERIOD)
    sol = solve_ivp(_rhs(gamma.real), (0.0, horizon), [gamma.real, gamma.imag, 0.0, 0.0],
                    method="DOP853", rtol=rtol, atol=atol, events=section)
    hits = [t for t in sol.t_events[0] if t > 1e-9]
    if len(hits) < 2:
        raise PeriodError(f"no return to the section within t={horizon!r} (E={level.e_gamma!r})")
    period = hits[1] - hits[0]
    return PeriodResult(period, "ode_oracle", 10.0 * rtol * period)


def period_alpha(param):
    """Physical period ``T_alpha = T_gamma / (2 lam)``."""
    level = energy_of(param)
    if level.excess == 0.0:
        return PeriodResult(SMALL_OSCILLATION_PERIOD / (2.0 * param.lam), "limit", 0.0)
    res = period_quadrature(level)
    s = 2.0 * param.lam
    return PeriodResult(res.period / s, res.method, res.est_error / s,
                        res.lower_half / s, res.upper_half / s)


@dataclass(frozen=True)
class ScanRow:
    e_gamma: float
    t_quadrature: float
    t_oracle: float
    t_asymptotic: float
    est_error: float

    @property
    def ratio_asymptotic(self):
        return self.t_quadrature / self.t_asymptotic

    @property
    def ratio_oracle(self):
        return self.t_quadrature / self.t_oracle if self.t_oracle == self.t_oracle else math.nan


def gamma_at_level(level):
    """A normalized datum with the given energy: ``gamma = 1 + i sqrt(E - 1)``."""
    level = _as_level(level)
    return complex(1.0, math.sqrt(level.excess))


def continuity_scan(e_grid, oracle=False, threads=1):
    """Tabulate periods over an increasing grid of energies ``E > 1``."""
    levels = [_as_level(e) for e in e_grid]
    if any(lv.excess <= 0 for lv in levels):
        raise ValueError("continuity scan needs every E > 1")
    if any(b.e_gamma < a.e_gamma for a, b in zip(levels, levels[1:])):
        raise ValueError("energy grid must be sorted")

    def row(lv):
        q = period_quadrature(lv)
        o = period_ode_oracle(gamma_at_level(lv)).period if oracle else math.nan
        return ScanRow(lv.e_gamma, q.period, o, period_asymptotic(lv).period, q.est_error)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(row, levels))
    return [row(lv) for lv in levels]


def max_adjacent_jump(rows):
    t = np.array([r.t_quadrature for r in rows])
    return float(np.max(np.abs(np.diff(t)))) if len(t) > 1 else 0.0


def write_scan_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["E", "T_quadrature", "T_oracle", "T_asymptotic",
                    "ratio_asymptotic", "ratio_oracle", "est_error"])
        for r in rows:
            w.writerow([repr(float(v)) for v in (r.e_gamma, r.t_quadrature, r.t_oracle,
                                                 r.t_asymptotic, r.ratio_asymptotic,
                                                 r.ratio_oracle, r.est_error)])
