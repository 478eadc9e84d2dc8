"""Closed-form Gaussian solutions: Gaussons, breathers and their by-products.

A packet is

    G(t, x) = exp(i(theta + 2 lam omega t + v.x - |v|^2 t / 2) + omega) u^A(t, x - x0 - v t)

where ``u^A`` is the d-dimensional breather generated by the complex shape
matrix ``A`` (``u^A(0, x) = exp(d/2 - x^T A x)``). When ``Re A`` and ``Im A``
commute, ``A = R diag(beta) R^T`` with ``R`` real orthogonal and ``u^A`` is a
product of one-dimensional breathers in the rotated coordinates ``R^T x``.

Fields are evaluated through their logarithms so that products of tiny
Gaussian tails do not underflow before they are needed.
"""

import math
import threading
from dataclasses import dataclass

import numpy as np

from .breather import BreatherParam, integrate, tau_bounds, turning_points, energy_of
from .spectral import Field

COMMUTE_TOL = 1e-10
SYMMETRY_TOL = 1e-12


class ShapeError(ValueError):
    """Invalid or unsupported shape matrix."""


@dataclass(frozen=True, eq=False)
class ShapeMatrix:
    a_real: np.ndarray
    a_imag: np.ndarray

    def __post_init__(self):
        ar = np.atleast_2d(np.asarray(self.a_real, dtype=float))
        ai = np.atleast_2d(np.asarray(self.a_imag, dtype=float))
        object.__setattr__(self, "a_real", ar)
        object.__setattr__(self, "a_imag", ai)
        d = ar.shape[0]
        if ar.shape != (d, d) or ai.shape != (d, d):
            raise ShapeError(f"shape matrices must be square and equal-sized, got {ar.shape} and {ai.shape}")
        for name, m in (("shape_re", ar), ("shape_im", ai)):
            if not np.all(np.isfinite(m)):
                raise ShapeError(f"{name} has non-finite entries")
            diff = np.abs(m - m.T)
            if diff.max() > SYMMETRY_TOL * max(1.0, np.abs(m).max()):
                i, j = np.unravel_index(np.argmax(diff), diff.shape)
                raise ShapeError(f"{name} is not symmetric: entry [{i}][{j}]={m[i, j]!r} "
                                 f"but [{j}][{i}]={m[j, i]!r}")
        try:
            np.linalg.cholesky(ar)
        except np.linalg.LinAlgError:
            raise ShapeError("shape_re is not positive definite") from None

    @classmethod
    def from_complex(cls, a):
        a = np.atleast_2d(np.asarray(a, dtype=complex))
        return cls(a.real, a.imag)

    @classmethod
    def scalar(cls, lam, d):
        return cls(lam * np.eye(d), np.zeros((d, d)))

    @property
    def dim(self):
        return self.a_real.shape[0]

    @property
    def matrix(self):
        return self.a_real + 1j * self.a_imag

    @property
    def commutator_norm(self):
        c = self.a_real @ self.a_imag - self.a_imag @ self.a_real
        return float(np.linalg.norm(c))

    @property
    def commuting(self):
        return self.commutator_norm < COMMUTE_TOL


def gausson(d, lam, x):
    """``exp(d/2 - lam |x|^2)`` at points ``x`` of shape ``(..., d)``."""
    x = _coords(x, d)
    return np.exp(d / 2.0 - lam * np.sum(x * x, axis=-1))


def _coords(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"points have {x.shape[-1]} coordinates, expected {d}")
    return x


# -- one-dimensional breathers ------------------------------------------------

class BreatherFlow:
    """Width trajectory for a normalized datum, extended on demand.

    The trajectory is integrated on ``[0, S]`` (and ``[-S', 0]`` for negative
    times) and re-integrated over a doubled span when a later time is asked
    for. Access is serialized by a lock so one flow can serve many threads.
    """

    def __init__(self, gamma, rtol=1e-12, atol=1e-13):
        self.gamma = complex(gamma)
        self.rtol, self.atol = rtol, atol
        self.constant = self.gamma == 1.0
        self._spans = {1: None, -1: None}
        self._lock = threading.Lock()

    def _trajectory(self, sign, reach):
        with self._lock:
            traj = self._spans[sign]
            if traj is None or abs(traj.times[-1]) < reach:
                span = max(2.0 * reach, 16.0)
                traj = integrate(self.gamma, sign * span, rtol=self.rtol, atol=self.atol,
                                 n_samples=2)
                self._spans[sign] = traj
            return traj

    def state(self, s):
        """``(tau, tau_dot, C1, C2)`` at normalized time(s) ``s``."""
        s = np.asarray(s, dtype=float)
        if self.constant:
            ones = np.ones_like(s)
            return ones, 0.0 * ones, s.copy(), 0.0 * ones
        out = np.empty((4,) + s.shape)
        for sign in (1, -1):
            mask = (s >= 0) if sign == 1 else (s < 0)
            if not np.any(mask):
                continue
            reach = float(np.max(np.abs(s[mask])))
            traj = self._trajectory(sign, reach)
            out[:, mask] = traj.state(s[mask])
        return out[0], out[1], out[2], out[3]


_FLOWS = {}
_FLOWS_LOCK = threading.Lock()


def flow_for(gamma):
    gamma = complex(gamma)
    with _FLOWS_LOCK:
        flow = _FLOWS.get(gamma)
        if flow is None:
            flow = _FLOWS[gamma] = BreatherFlow(gamma)
        return flow


def width_state(param, t):
    """Physical ``(r, r_dot, Phi)`` at time(s) ``t``."""
    lam = param.lam
    s = 2.0 * lam * np.asarray(t, dtype=float)
    tau, p, c1, c2 = flow_for(param.gamma).state(s)
    k = math.sqrt(2.0 * lam)
    return tau / k, p * k, 0.5 * (c1 + c2 - s)


def phase_phi(param, t):
    """Accumulated phase ``Phi(t) = 1/2 int r^-2 + lam int ln(r/alpha_r) - lam t``."""
    return width_state(param, t)[2]


def breather_log_1d(param, t, x):
    """Logarithm of the one-dimensional breather at a single time ``t``."""
    r, rd, phi = (float(v) for v in width_state(param, t))
    x = np.asarray(x, dtype=float)
    x2 = x * x
    return (0.5 * math.log(param.alpha_r / r) + 0.5 - x2 / (2.0 * r * r)
            + 1j * (rd * x2 / (2.0 * r) - phi))


def breather_field_1d(param, t, x):
    """``sqrt(alpha_r/r) exp(1/2 - i Phi - x^2/(2 r^2) + i r_dot x^2 / (2 r))``."""
    return np.exp(breather_log_1d(param, t, x))


# -- d-dimensional breathers --------------------------------------------------

def codiagonalize(shape):
    """Return ``(R, beta)`` with ``A = R diag(beta) R^T`` and ``R`` orthogonal.

    Uses the eigenvectors of ``Re A + kappa Im A`` for an irrational
    ``kappa``; commuting symmetric matrices share them for all but finitely
    many ``kappa``, so a second value is tried if the first is unlucky.
    """
    c = shape.commutator_norm
    if c >= COMMUTE_TOL:
        raise ShapeError(f"Re A and Im A do not commute: ||[Re A, Im A]|| = {c:.3e}")
    a = shape.matrix
    scale = max(1.0, float(np.linalg.norm(a)))
    for kappa in (math.sqrt(2.0) - 1.0, math.pi - 3.0, 1.0 / math.sqrt(7.0)):
        _, rot = np.linalg.eigh(shape.a_real + kappa * shape.a_imag)
        diag = rot.T @ a @ rot
        beta = np.diag(diag).copy()
        recon = rot @ np.diag(beta) @ rot.T
        if np.linalg.norm(a - recon) < 1e-10 * scale:
            return rot, beta
    raise ShapeError("co-diagonalization failed to reach 1e-10 reconstruction error")


def alpha_from_beta(beta, lam):
    """One-dimensional datum for the factor ``exp(1/2 - beta x^2)``.

    Matching the breather at ``t = 0`` gives ``1/(2 alpha_r^2) = Re beta`` and
    ``-alpha_i / (2 alpha_r) = Im beta``.
    """
    beta = complex(beta)
    if not beta.real > 0:
        raise ShapeError(f"Re beta must be positive, got {beta.real}")
    a_r = 1.0 / math.sqrt(2.0 * beta.real)
    return BreatherParam(a_r, -2.0 * beta.imag * a_r, lam)


@dataclass(frozen=True, eq=False)
class BreatherND:
    """Co-diagonalized shape with its per-axis one-dimensional data."""

    rotation: np.ndarray
    params: tuple

    @classmethod
    def from_shape(cls, shape, lam):
        rot, beta = codiagonalize(shape)
        return cls(rot, tuple(alpha_from_beta(b, lam) for b in beta))

    def log_field(self, t, x):
        y = x @ self.rotation
        out = np.zeros(y.shape[:-1], dtype=complex)
        for j, p in enumerate(self.params):
            out += breather_log_1d(p, t, y[..., j])
        return out

    def widths(self, t):
        return np.array([float(width_state(p, t)[0]) for p in self.params])


def breather_field_nd(shape, lam, t, x):
    """d-dimensional breather ``u^A(t, x)`` at points ``x`` of shape ``(..., d)``."""
    nd = BreatherND.from_shape(shape, lam)
    return np.exp(nd.log_field(t, _coords(x, shape.dim)))


# -- packets --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianPacket:
    shape: ShapeMatrix
    omega: float = 0.0
    center: tuple = None
    velocity: tuple = None
    theta: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        d = self.shape.dim
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        for name in ("center", "velocity"):
            v = getattr(self, name)
            v = np.zeros(d) if v is None else np.atleast_1d(np.asarray(v, dtype=float))
            if v.shape != (d,):
                raise ValueError(f"{name} must have {d} components, got {v.shape}")
            object.__setattr__(self, name, v)
        if not self.shape.commuting:
            raise ShapeError(f"Re A and Im A do not commute: "
                             f"||[Re A, Im A]|| = {self.shape.commutator_norm:.3e}")
        object.__setattr__(self, "_nd", BreatherND.from_shape(self.shape, self.lam))

    @classmethod
    def gausson(cls, lam, center, d=None, **kw):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        d = d or center.size
        return cls(ShapeMatrix.scalar(lam, d), center=center, lam=lam, **kw)

    @property
    def dim(self):
        return self.shape.dim

    @property
    def axis_params(self):
        return self._nd.params

    def log_field(self, t, x):
        x = _coords(x, self.dim)
        v = self.velocity
        gauge = (self.theta + 2.0 * self.lam * self.omega * t + x @ v - 0.5 * float(v @ v) * t)
        return 1j * gauge + self.omega + self._nd.log_field(t, x - self.center - v * t)

    def field(self, t, x):
        return np.exp(self.log_field(t, x))

    def log_amplitude(self, t):
        """``ln max_x |G(t, x)| = omega + d/2 + 1/2 sum ln(alpha_r / r_j(t))``."""
        widths = self._nd.widths(t)
        ar = np.array([p.alpha_r for p in self.axis_params])
        return self.omega + self.dim / 2.0 + 0.5 * float(np.sum(np.log(ar / widths)))

    def max_log_amplitude(self):
        """Supremum over all times of :meth:`log_amplitude` (at the narrowest widths)."""
        out = self.omega + self.dim / 2.0
        for p in self.axis_params:
            r_min = turning_points(energy_of(p)).gamma_minus / math.sqrt(2.0 * p.lam)
            out += 0.5 * math.log(p.alpha_r / r_min)
        return out

    def re_spectrum_range(self):
        """``(min, max)`` over time and axes of the spectrum of ``Re A(t)``."""
        lo, hi = math.inf, -math.inf
        for p in self.axis_params:
            tp = turning_points(energy_of(p))
            # Re A(t) has eigenvalues 1 / (2 r_j(t)^2), r = tau / sqrt(2 lam)
            lo = min(lo, p.lam / tp.gamma_plus ** 2)
            hi = max(hi, p.lam / tp.gamma_minus ** 2)
        return lo, hi

    def shape_at(self, t):
        """Complex shape matrix ``A(t)`` of the Gaussian profile at time ``t``."""
        rot = self._nd.rotation
        betas = []
        for p in self.axis_params:
            r, rd, _ = (float(v) for v in width_state(p, t))
            betas.append(1.0 / (2.0 * r * r) - 1j * rd / (2.0 * r))
        return rot @ np.diag(betas) @ rot.T


def packet_field(packet, t, x):
    return packet.field(t, x)


def packet_log_field(packet, t, x):
    return packet.log_field(t, x)


def check_shared_velocity(packets):
    if not packets:
        raise ValueError("need at least one packet")
    v0 = packets[0].velocity
    for k, p in enumerate(packets[1:], start=1):
        if p.dim != packets[0].dim:
            raise ValueError(f"packet {k} has dimension {p.dim}, expected {packets[0].dim}")
        if not np.allclose(p.velocity, v0, rtol=0.0, atol=1e-14):
            raise ValueError(f"packet {k} has velocity {p.velocity.tolist()} but packet 0 has "
                             f"{v0.tolist()}; all packets must share one velocity")


def sum_field(packets, t, grid):
    """Pointwise sum of the packet fields on ``grid``."""
    check_shared_velocity(packets)
    if packets[0].dim != grid.dim:
        raise ValueError(f"packets are {packets[0].dim}-dimensional but the grid is {grid.dim}-dimensional")
    pts = grid.points
    total = np.zeros(grid.shape, dtype=complex)
    for p in packets:
        total += p.field(t, pts)
    return Field(grid, total)


def breather_confinement(param):
    """Physical width range ``[r_min, r_max]`` implied by the normalized bounds."""
    lo, hi = tau_bounds(energy_of(param))
    k = math.sqrt(2.0 * param.lam)
    return lo / k, hi / k
