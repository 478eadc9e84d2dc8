"""Elementary inequalities for ``F(z) = z ln|z|^2`` and randomized sweeps.

Each ``*_gap`` function returns ``rhs - lhs`` of an inequality that should
hold for every admissible input, so a correct inequality gives a
nonnegative gap. ``0 ln 0`` is taken as 0 throughout.
"""

from dataclasses import dataclass

import numpy as np


def z_log_z2(z):
    """``z ln|z|^2`` with the value 0 at ``z = 0``."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)  # hypot: no underflow of |z|^2 for tiny z
    out = np.zeros_like(z)
    nz = r > 0
    out[nz] = z[nz] * (2.0 * np.log(r[nz]))
    return out if out.ndim else complex(out)


def y_log_abs_y(y):
    """``y ln|y|`` for real ``y`` with the value 0 at ``y = 0``."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    nz = y != 0
    out[nz] = y[nz] * np.log(np.abs(y[nz]))
    return out if out.ndim else float(out)


def log_inequality_gap(z1, z2):
    """``2|z2 - z1|^2 - |Im((F(z2) - F(z1)) conj(z2 - z1))|``."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    dz = z2 - z1
    lhs = np.abs(np.imag((z_log_z2(z2) - z_log_z2(z1)) * np.conj(dz)))
    gap = 2.0 * np.abs(dz) ** 2 - lhs
    return gap if gap.ndim else float(gap)


def almost_lipschitz_gap(z, z_tilde):
    """``|z - z~| (6 - ln|z|^2) - |F(z~) - F(z)|`` for ``0 < |z| <= 1``, ``|z~| <= 1``."""
    z = np.asarray(z, dtype=complex)
    zt = np.asarray(z_tilde, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z must be nonzero")
    if np.any(np.abs(z) > 1 + 1e-15) or np.any(np.abs(zt) > 1 + 1e-15):
        raise ValueError("both arguments must lie in the closed unit disk")
    gap = np.abs(z - zt) * (6.0 - 2.0 * np.log(np.abs(z))) - np.abs(z_log_z2(zt) - z_log_z2(z))
    return gap if gap.ndim else float(gap)


def y_ln_y_gap(a, delta):
    """``delta (1 - ln a) - ((a - delta) ln|a - delta| - a ln a)``.

    Domain: ``0 < a <= 1``, ``delta >= 0``, ``a - delta >= -1``.
    """
    a = np.asarray(a, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if np.any(a <= 0) or np.any(a > 1):
        raise ValueError("a must lie in (0, 1]")
    if np.any(delta < 0) or np.any(a - delta < -1):
        raise ValueError("delta must satisfy delta >= 0 and a - delta >= -1")
    lhs = y_log_abs_y(a - delta) - a * np.log(a)
    gap = delta * (1.0 - np.log(a)) - lhs
    return gap if gap.ndim else float(gap)


@dataclass
class SweepResult:
    name: str
    n_samples: int
    min_gap: float
    argmin: tuple  # inputs at the minimum

    @property
    def passed(self):
        return self.min_gap >= -1e-12

    def to_dict(self):
        return {"name": self.name, "n_samples": self.n_samples, "min_gap": self.min_gap,
                "argmin": [repr(v) for v in self.argmin], "passed": self.passed}


def _disk(rng, n, radius, log_radius_floor=None):
    # uniform in area, optionally mixed with log-uniform radii to reach tiny |z|
    r = radius * np.sqrt(rng.random(n))
    if log_radius_floor is not None:
        k = n // 2
        lo = np.log(log_radius_floor)
        r[:k] = np.exp(lo + (np.log(radius) - lo) * rng.random(k))
    phi = 2.0 * np.pi * rng.random(n)
    return r * np.exp(1j * phi)


def sweep_log_inequality(n, rng, radius=10.0):
    z1 = _disk(rng, n, radius, 1e-12)
    # a quarter of the pairs are close to each other, where both sides are small
    z2 = _disk(rng, n, radius, 1e-12)
    k = n // 4
    z2[:k] = z1[:k] + _disk(rng, k, 1e-3, 1e-12)
    gap = log_inequality_gap(z1, z2)
    i = int(np.argmin(gap))
    return SweepResult("log_inequality", n, float(gap[i]), (complex(z1[i]), complex(z2[i])))


def sweep_almost_lipschitz(n, rng, min_modulus=1e-8):
    z = _disk(rng, n, 1.0, min_modulus)
    z = np.where(np.abs(z) < min_modulus, min_modulus, z)
    zt = _disk(rng, n, 1.0, 1e-12)
    k = n // 4
    near = z[:k] + _disk(rng, k, 1e-3, 1e-12)
    zt[:k] = np.where(np.abs(near) <= 1.0, near, z[:k])
    gap = almost_lipschitz_gap(z, zt)
    i = int(np.argmin(gap))
    return SweepResult("almost_lipschitz", n, float(gap[i]), (complex(z[i]), complex(zt[i])))


def sweep_y_ln_y(n, rng):
    """Samples split evenly over ``delta < a``, ``a <= delta < 2a`` and ``delta >= 2a``."""
    a = np.exp(np.log(1e-12) * rng.random(n))  # log-uniform in [1e-12, 1]
    u = rng.random(n)
    case = np.arange(n) % 3
    delta = np.empty(n)
    m0, m1, m2 = case == 0, case == 1, case == 2
    delta[m0] = a[m0] * u[m0]
    delta[m1] = a[m1] * (1.0 + u[m1])
    # delta >= 2a up to the domain edge delta = a + 1
    delta[m2] = 2.0 * a[m2] + (1.0 - a[m2]) * u[m2]
    gap = y_ln_y_gap(a, delta)
    i = int(np.argmin(gap))
    return SweepResult("y_ln_y", n, float(gap[i]), (float(a[i]), float(delta[i])))


def run_all_sweeps(n, seed):
    rng = np.random.default_rng(seed)
    return [sweep_log_inequality(n, rng), sweep_almost_lipschitz(n, rng), sweep_y_ln_y(n, rng)]
