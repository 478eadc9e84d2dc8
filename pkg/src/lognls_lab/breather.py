"""Width dynamics of Gaussian breathers.

A one-dimensional Gaussian solution of the logarithmic NLS has width ``r(t)``
obeying ``r'' = 1/r**3 - 2*lam/r``. After the rescaling
``tau(s) = sqrt(2*lam) * r(s / (2*lam))`` the width obeys the normalized
Hamiltonian system ``tau'' = 1/tau**3 - 1/tau`` with conserved quantity
``tau'**2 + 1/tau**2 + 2*ln(tau)``. Everything in this module works in the
normalized variables; :class:`BreatherParam` carries the physical ones.
"""

import csv
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import solve_ivp

from ._numerics import bracketed_newton, expm1_minus, xm_log1p


class IntegrationError(RuntimeError):
    """The width ODE could not be advanced to the requested time."""


@dataclass(frozen=True)
class BreatherParam:
    """Physical initial data ``r(0) = alpha_r``, ``r'(0) = alpha_i``."""

    alpha_r: float
    alpha_i: float
    lam: float

    def __post_init__(self):
        if not self.alpha_r > 0:
            raise ValueError(f"alpha_r must be positive, got {self.alpha_r}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def gamma(self):
        """Normalized initial datum ``gamma = tau(0) + i tau'(0)``."""
        return rescale(self)

    @classmethod
    def from_gamma(cls, gamma, lam):
        return unscale(gamma, lam)

    @classmethod
    def gausson(cls, lam):
        return cls(1.0 / math.sqrt(2.0 * lam), 0.0, lam)


def rescale(param):
    s = math.sqrt(2.0 * param.lam)
    return complex(s * param.alpha_r, param.alpha_i / s)


def unscale(gamma, lam):
    gamma = complex(gamma)
    s = math.sqrt(2.0 * lam)
    return BreatherParam(gamma.real / s, gamma.imag * s, lam)


@dataclass(frozen=True)
class EnergyLevel:
    """Conserved energy ``E >= 1`` of the normalized width equation.

    ``excess`` stores ``E - 1`` separately so that levels just above the
    fixed point keep full relative precision.
    """

    e_gamma: float
    excess: float = field(default=None)

    def __post_init__(self):
        if self.excess is None:
            object.__setattr__(self, "excess", self.e_gamma - 1.0)
        if self.excess < 0 and self.excess > -1e-14:
            object.__setattr__(self, "excess", 0.0)
            object.__setattr__(self, "e_gamma", 1.0)
        if self.excess < 0:
            raise ValueError(f"energy level must be >= 1, got {self.e_gamma!r}")

    @classmethod
    def from_excess(cls, excess):
        return cls(1.0 + excess, excess)

    @property
    def degenerate(self):
        return self.excess == 0.0


def _as_gamma(param):
    if isinstance(param, BreatherParam):
        return rescale(param)
    gamma = complex(param)
    return gamma


def energy_of(param):
    """Energy level of a :class:`BreatherParam` or normalized ``gamma``.

    ``E - 1 = gamma_i**2 + (u - log1p(u))`` with ``u = 1/gamma_r**2 - 1``,
    which is exact algebra and avoids cancellation near ``gamma = 1``.
    """
    gamma = _as_gamma(param)
    gr, gi = gamma.real, gamma.imag
    if not gr > 0:
        raise ValueError(f"gamma_r must be positive, got {gr}")
    excess = gi * gi + xm_log1p(1.0 / (gr * gr) - 1.0)
    return EnergyLevel(gi * gi + 1.0 / (gr * gr) + 2.0 * math.log(gr), excess)


def _as_level(level):
    return level if isinstance(level, EnergyLevel) else EnergyLevel(float(level))


def tau_bounds(level):
    """A priori confinement interval ``[1/(1+sqrt(E-1)), exp(E/2)]``."""
    level = _as_level(level)
    return 1.0 / (1.0 + math.sqrt(level.excess)), math.exp(level.e_gamma / 2.0)


@dataclass(frozen=True)
class TurningPoints:
    gamma_minus: float
    gamma_plus: float
    # delta_minus = 1/gamma_minus**2 - 1 and delta_plus = gamma_plus**2 - 1,
    # computed without cancellation
    delta_minus: float
    delta_plus: float


def potential(x):
    """``2F(x) = 1/x**2 + 2 ln x``; turning points solve ``2F(x) = E``."""
    x = np.asarray(x, dtype=float)
    return 1.0 / (x * x) + 2.0 * np.log(x)


def turning_points(level):
    """Roots of ``1/x**2 + 2 ln x = E`` on ``(0, 1]`` and ``[1, inf)``.

    The roots are sought in ``y = 2 ln gamma_plus`` and ``z = -2 ln
    gamma_minus``, where the equations become ``expm1(-y) + y = E - 1`` and
    ``expm1(z) - z = E - 1``. Both left-hand sides are convex and increasing,
    so Newton started on the right of the root stays inside the bracket.
    """
    level = _as_level(level)
    c = level.excess
    if c == 0.0:
        return TurningPoints(1.0, 1.0, 0.0, 0.0)

    up = lambda y: expm1_minus(-y) - c
    up_d = lambda y: -math.expm1(-y)
    y_hi = c + 1.0
    y = bracketed_newton(up, up_d, 0.0, y_hi, y_hi)

    low = lambda z: expm1_minus(z) - c
    low_d = lambda z: math.expm1(z)
    z_hi = min(math.sqrt(2.0 * c), 2.0 * math.log1p(math.sqrt(c)))
    z = bracketed_newton(low, low_d, 0.0, z_hi, z_hi)

    return TurningPoints(
        gamma_minus=math.exp(-z / 2.0),
        gamma_plus=math.exp(y / 2.0),
        delta_minus=math.expm1(z),
        delta_plus=math.expm1(y),
    )


def _rhs(gamma_r):
    log_gr = math.log(gamma_r)

    def rhs(t, y):
        tau, p = y[0], y[1]
        inv2 = 1.0 / (tau * tau)
        return [p, inv2 / tau - 1.0 / tau, inv2, math.log(tau) - log_gr]

    return rhs


@dataclass
class BreatherTrajectory:
    """Samples of the normalized width along with its cumulative integrals.

    ``cum_inv_r2`` is the running integral of ``1/tau**2`` and ``cum_log_r``
    that of ``ln(tau/gamma_r)``; both start at 0. ``dense`` evaluates the full
    state ``(tau, tau_dot, cum_inv_r2, cum_log_r)`` anywhere in the
    integration span, and is ``None`` for the constant Gausson trajectory.
    """

    gamma: complex
    level: EnergyLevel
    times: np.ndarray
    tau: np.ndarray
    tau_dot: np.ndarray
    cum_inv_r2: np.ndarray
    cum_log_r: np.ndarray
    energy_drift: np.ndarray
    dense: object = None

    def state(self, t):
        """State vector(s) ``(tau, tau_dot, cum_inv_r2, cum_log_r)`` at ``t``."""
        t = np.asarray(t, dtype=float)
        if self.dense is None:
            ones = np.ones_like(t)
            return np.array([ones, 0.0 * ones, t, 0.0 * ones])
        lo, hi = min(self.times[0], self.times[-1]), max(self.times[0], self.times[-1])
        if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
            raise ValueError(f"time outside the integrated span [{lo}, {hi}]")
        return self.dense(t)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "tau", "tau_dot", "energy_drift", "cum_inv_r2", "cum_log_r"])
            for row in zip(self.times, self.tau, self.tau_dot, self.energy_drift,
                           self.cum_inv_r2, self.cum_log_r):
                w.writerow([repr(float(v)) for v in row])


def integrate(param, t_end, rtol=1e-12, atol=1e-13, n_samples=2001, max_step=np.inf):
    """Integrate the normalized width ODE from 0 to ``t_end``.

    ``param`` is a :class:`BreatherParam` or a normalized ``gamma``;
    ``t_end`` is in normalized time and may be negative. Uses the DOP853
    embedded Runge-Kutta pair with dense output; the cumulative phase
    integrals are carried as extra states.
    """
    gamma = _as_gamma(param)
    level = energy_of(gamma)
    if not math.isfinite(t_end):
        raise ValueError("t_end must be finite")
    if rtol <= 0 or atol <= 0 or n_samples < 2:
        raise ValueError("integration controls must be positive")
    times = np.linspace(0.0, t_end, n_samples)
    if level.degenerate and gamma.real == 1.0:
        zeros = np.zeros_like(times)
        return BreatherTrajectory(gamma, level, times, np.ones_like(times), zeros,
                                  times.copy(), zeros.copy(), zeros.copy(), None)
    if t_end == 0.0:
        zeros = np.zeros(1)
        return BreatherTrajectory(gamma, level, zeros, np.array([gamma.real]),
                                  np.array([gamma.imag]), zeros, zeros, zeros, None)
    sol = solve_ivp(_rhs(gamma.real), (0.0, t_end), [gamma.real, gamma.imag, 0.0, 0.0],
                    method="DOP853", rtol=rtol, atol=atol, dense_output=True,
                    max_step=max_step)
    if sol.status != 0:
        reached = sol.t[-1] if len(sol.t) else 0.0
        raise IntegrationError(f"width ODE failed at t={reached!r}: {sol.message}")
    y = sol.sol(times)
    tau, p = y[0], y[1]
    drift = np.abs(p * p + potential(tau) - level.e_gamma)
    return BreatherTrajectory(gamma, level, times, tau, p, y[2], y[3], drift, sol.sol)


def physical_state(traj, lam, t):
    """Physical ``(r, r_dot, Phi)`` at physical time(s) ``t`` for a trajectory.

    ``Phi(t) = 1/2 int 1/r**2 + lam int ln(r/alpha_r) - lam t``, which in
    normalized time ``s = 2 lam t`` is ``(C1(s) + C2(s) - s)/2``.
    """
    s = 2.0 * lam * np.asarray(t, dtype=float)
    tau, p, c1, c2 = traj.state(s)
    scale = math.sqrt(2.0 * lam)
    return tau / scale, p * scale, 0.5 * (c1 + c2 - s)
