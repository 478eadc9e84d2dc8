"""Superposition of separated Gaussian packets.

For packets ``g_k`` with centers at least ``1/eps`` apart the nonlinearity
gap ``g ln|g| - sum g_k ln|g_k|`` is of order ``exp(-tau_- / (4 eps^2))``,
and an L2 energy estimate plus Gronwall bounds the distance between the
evolution of the sum and the sum of the evolutions by

    C_d N^{3/2} lam tau_+ / (eps^{d/2+1} sqrt(tau_-)) exp(-tau_-/(4 eps^2) + max omega + 2 lam t).

``C_d`` is only known to exist, so here it is always an input or a fitted
calibration constant.
"""

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from ._io import dump_json
from .gaussian import GaussianPacket, check_shared_velocity, sum_field
from .spectral import Field, SolverError, SplitStepSolver, mass


@dataclass(frozen=True)
class SeparationData:
    epsilon: float  # 1 / min pairwise center distance; 0 for a single packet
    delta_omega: float
    tau_minus: float
    tau_plus: float
    n_packets: int
    omega_max: float

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.n_packets > 1 and not self.epsilon > 0:
            raise ValueError("epsilon must be positive with several packets")
        if not self.delta_omega >= 0:
            raise ValueError(f"delta_omega must be >= 0, got {self.delta_omega}")
        if not 0 < self.tau_minus <= self.tau_plus < math.inf:
            raise ValueError(f"need 0 < tau_minus <= tau_plus < inf, got {self.tau_minus}, {self.tau_plus}")
        if self.n_packets < 1:
            raise ValueError("need at least one packet")

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("epsilon", "delta_omega", "tau_minus", "tau_plus", "n_packets", "omega_max")}


def min_pair_distance(centers):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    best = math.inf
    for i, j in itertools.combinations(range(len(centers)), 2):
        best = min(best, float(np.linalg.norm(centers[i] - centers[j])))
    return best


def tau_extremes(packets):
    """``(tau_-, tau_+)``: extremes over time, packets and axes of the spectrum of ``Re A_k(t)``."""
    lo, hi = math.inf, -math.inf
    for p in packets:
        a, b = p.re_spectrum_range()
        lo, hi = min(lo, a), max(hi, b)
    return lo, hi


def separation(packets):
    check_shared_velocity(packets)
    tm, tp = tau_extremes(packets)
    omegas = [p.omega for p in packets]
    dist = min_pair_distance([p.center for p in packets])
    return SeparationData(
        epsilon=0.0 if math.isinf(dist) else 1.0 / dist,
        delta_omega=max(omegas) - min(omegas),
        tau_minus=tm, tau_plus=tp, n_packets=len(packets), omega_max=max(omegas))


def epsilon_zero(sep, d):
    """Admissibility threshold used for the time-dependent packets.

    ``(1/sqrt 2) min(sqrt(tau_+) / max(sqrt(dw~ + 1), sqrt(ln N)), sqrt(tau_- / (d/2 + 1)))``
    with ``dw~ = delta_omega + (d/2) ln(tau_+ / tau_-)``.
    """
    dw = sep.delta_omega + 0.5 * d * math.log(sep.tau_plus / sep.tau_minus)
    first = math.sqrt(sep.tau_plus) / max(math.sqrt(dw + 1.0), math.sqrt(math.log(sep.n_packets)))
    second = math.sqrt(sep.tau_minus / (0.5 * d + 1.0))
    return min(first, second) / math.sqrt(2.0)


def epsilon_zero_lemma(lam_minus, lam_plus, delta_omega, n_packets, d):
    """Threshold for fixed Gaussians: ``min(sqrt(l+)/max(sqrt(dw+1), sqrt(ln N)), sqrt(l-/(d+2)))``."""
    first = math.sqrt(lam_plus) / max(math.sqrt(delta_omega + 1.0), math.sqrt(math.log(n_packets)))
    return min(first, math.sqrt(lam_minus / (d + 2.0)))


def log_bound_shape(t, sep, lam, d):
    """Natural log of the bound with ``C_d = 1``; ``-inf`` for a single packet."""
    if sep.epsilon == 0.0:
        return -math.inf
    eps = sep.epsilon
    return (1.5 * math.log(sep.n_packets) + math.log(lam * sep.tau_plus)
            - (0.5 * d + 1.0) * math.log(eps) - 0.5 * math.log(sep.tau_minus)
            - sep.tau_minus / (4.0 * eps * eps) + sep.omega_max + 2.0 * lam * np.asarray(t, dtype=float))


def bound_shape(t, sep, lam, d):
    with np.errstate(over="ignore"):  # e^{2 lam t} past ~e^709 is +inf, which is the right answer
        return np.exp(log_bound_shape(t, sep, lam, d))


def theorem_bound(t, sep, lam, d, c_d):
    if not c_d > 0:
        raise ValueError(f"c_d must be positive, got {c_d}")
    return c_d * bound_shape(t, sep, lam, d)


def t_delta(delta, sep, lam, d, c_d):
    """Time at which the bound reaches ``delta``.

    ``tau_-/(8 lam eps^2) - omega/(2 lam) + (ln delta - ln(C_d N^{3/2} lam tau_+ / sqrt(tau_-))
    + (d/2 + 1) ln eps) / (2 lam)``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if sep.epsilon == 0.0:
        return math.inf
    eps = sep.epsilon
    pref = math.log(c_d) + 1.5 * math.log(sep.n_packets) + math.log(lam * sep.tau_plus) \
        - 0.5 * math.log(sep.tau_minus)
    return (sep.tau_minus / (8.0 * lam * eps * eps) - sep.omega_max / (2.0 * lam)
            + (math.log(delta) - pref + (0.5 * d + 1.0) * math.log(eps)) / (2.0 * lam))


def t_delta_leading(sep, lam):
    if sep.epsilon == 0.0:
        return math.inf
    return sep.tau_minus / (8.0 * lam * sep.epsilon ** 2)


# -- nonlinearity gap ---------------------------------------------------------------

def nearest_center_cells(points, centers):
    """Index of the nearest center at each point (lowest index on ties)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d2 = np.stack([np.sum((points - c) ** 2, axis=-1) for c in centers])
    return np.argmin(d2, axis=0)


def gap_values(log_fields, cells, squared=False):
    """Pointwise ``g ln|g| - sum g_j ln|g_j|`` from the packet log-fields.

    On the cell of packet ``k`` write ``g = g_k (1 + rho)``; then the gap is
    ``sum_{j != k} g_j (l_k - l_j) + g ln|1 + rho|`` with ``l = ln|g|``, which
    involves no cancellation between large terms. With ``squared`` the
    result is for ``ln|.|^2`` (twice the value).
    """
    logs = np.stack(log_fields)
    n = logs.shape[0]
    out = np.zeros(logs.shape[1:], dtype=complex)
    for k in range(n):
        mask = cells == k
        if not np.any(mask):
            continue
        lk = logs[k][mask]
        rho = np.zeros_like(lk)
        acc = np.zeros_like(lk)
        for j in range(n):
            if j == k:
                continue
            lj = logs[j][mask]
            gj = np.exp(lj)
            rho += np.exp(lj - lk)
            acc += gj * (lk.real - lj.real)
        g = np.exp(lk) * (1.0 + rho)
        small = np.abs(rho) < 0.5
        log_mod = np.empty(rho.shape)
        log_mod[small] = 0.5 * np.log1p(2.0 * rho[small].real + np.abs(rho[small]) ** 2)
        big = ~small
        a = np.abs(1.0 + rho[big])
        log_mod[big] = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), 0.0)
        out[mask] = acc + g * log_mod
    return 2.0 * out if squared else out


def check_resolved(packets, grid, t=0.0, tail=1e-14):
    """Reject grids on which some packet is under-resolved or touches the box edge."""
    tm, tp = tau_extremes(packets)
    if grid.h * math.sqrt(tp) > 0.5:
        raise ValueError(f"grid spacing {grid.h:.4g} does not resolve decay rate {tp:.4g} "
                         f"(need h*sqrt(tau_+) <= 0.5)")
    for k, p in enumerate(packets):
        c = p.center + p.velocity * t
        margin = float(np.min(grid.half_length - np.abs(c)))
        if not tm * margin ** 2 > -math.log(tail):
            raise ValueError(f"packet {k} at {c.tolist()} is within {margin:.3g} of the box edge; "
                             f"its tail there exceeds {tail:g}")


def gap_norm(packets, t, grid, squared=False, check=True):
    """Grid L2 norm of the nonlinearity gap of the packet sum at time ``t``."""
    check_shared_velocity(packets)
    if len(packets) == 1:
        return 0.0
    if check:
        check_resolved(packets, grid, t)
    pts = grid.points
    logs = [p.log_field(t, pts) for p in packets]
    centers = [p.center + p.velocity * t for p in packets]
    vals = gap_values(logs, nearest_center_cells(pts, centers), squared)
    return math.sqrt(float(np.sum(np.abs(vals) ** 2)) * grid.cell_volume)


def gap_lemma_bound(lam_minus, lam_plus, eps, n_packets, omega_max, d, c_d=1.0):
    """``C_d N^{3/2} l+ / (eps^{d/2+1} sqrt(l-)) exp(-l-/(4 eps^2) + omega)``."""
    return (c_d * n_packets ** 1.5 * lam_plus / (eps ** (0.5 * d + 1.0) * math.sqrt(lam_minus))
            * math.exp(-lam_minus / (4.0 * eps * eps) + omega_max))


def pointwise_corollary_slack(packets, t, points, lam_plus=None):
    """Right-hand side minus left-hand side of the pointwise cell estimate.

    For each point in the cell of packet ``k``:
    ``|g ln|g|^2 - sum g_j ln|g_j|^2| <= 2 sum_{j!=k} |g_j| (dw_j + dw_k + 3 + 2 ln N
    + l+ |x - x_k|^2 + l+ |x - x_j|^2)`` with ``dw_j = omega - omega_j``. The
    ``omega_j`` are the log-amplitudes of the packets at time ``t``.
    """
    n = len(packets)
    logs = [p.log_field(t, points) for p in packets]
    centers = [p.center + p.velocity * t for p in packets]
    cells = nearest_center_cells(points, centers)
    lhs = np.abs(gap_values(logs, cells, squared=True))
    om = np.array([p.log_amplitude(t) for p in packets])
    dw = om.max() - om
    if lam_plus is None:
        lam_plus = max(float(np.max(np.linalg.eigvalsh(p.shape_at(t).real))) for p in packets)
    dist2 = [np.sum((points - c) ** 2, axis=-1) for c in centers]
    rhs = np.zeros(lhs.shape)
    for k in range(n):
        mask = cells == k
        for j in range(n):
            if j == k:
                continue
            rhs[mask] += 2.0 * np.exp(logs[j][mask].real) * (
                dw[j] + dw[k] + 3.0 + 2.0 * math.log(n)
                + lam_plus * dist2[k][mask] + lam_plus * dist2[j][mask])
    return rhs - lhs


def linf_sum_slack(packets, t, points):
    """``N exp(max omega_j(t)) - sum_j |g_j(x)|`` at each point."""
    total = np.zeros(points.shape[:-1])
    for p in packets:
        total += np.exp(p.log_field(t, points).real)
    om = max(p.log_amplitude(t) for p in packets)
    return len(packets) * math.exp(om) - total


# -- Gaussian tail integrals -----------------------------------------------------

def sphere_area(d):
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def tail_constant(m):
    """``C_m`` with ``J_m = int_R^inf r^m e^{-g r^2} dr <= C_m R^{m-1} e^{-g R^2} / g`` for ``R >= g^{-1/2}``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    c = 0.5
    k = m % 2
    while k < m:
        c = 0.5 * (1.0 + (k + 1) * c)
        k += 2
    return c


def gaussian_tail_bounds(gamma, R, d, x0_norm=0.0):
    """Explicit upper bounds for the three tail integrals outside the ball ``B(0, R)``.

    Returns bounds for ``int |x|^4 e^{-g|x|^2}``, ``int e^{-g|x|^2}`` and
    ``int |x - x0|^4 e^{-g|x|^2}``, built from the radial recursion and
    ``|x - x0|^4 <= 8 (|x|^4 + |x0|^4)``.
    """
    if not (gamma > 0 and R > 0):
        raise ValueError("gamma and R must be positive")
    if R < gamma ** -0.5 * (1 - 1e-12):
        raise ValueError(f"need R >= gamma^(-1/2): R={R}, gamma^(-1/2)={gamma ** -0.5}")
    if x0_norm < 0 or x0_norm > 2 * R * (1 + 1e-12):
        raise ValueError(f"need 0 <= |x0| <= 2R, got |x0|={x0_norm}, R={R}")
    s = sphere_area(d)
    e = math.exp(-gamma * R * R) / gamma
    b1 = s * tail_constant(d + 3) * R ** (d + 2) * e
    b2 = s * tail_constant(d - 1) * R ** (d - 2) * e
    b3 = 8.0 * (b1 + x0_norm ** 4 * b2)
    return b1, b2, b3


def tail_integrals(gamma, R, d, x0_norm=0.0):
    """The same three integrals by radial quadrature.

    The angular average of ``(r^2 + a^2 - 2 r a c)^2`` over the unit sphere
    is ``(r^2 + a^2)^2 + 4 r^2 a^2 / d``.
    """
    s = sphere_area(d)
    a = x0_norm
    scale = math.exp(-gamma * R * R)

    def radial(f):
        # r = R + u, factor exp(-g R^2) pulled out
        g = lambda u: f(R + u) * math.exp(-gamma * u * (2.0 * R + u))
        val, _ = integrate.quad(g, 0.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        return s * scale * val

    i1 = radial(lambda r: r ** (d + 3))
    i2 = radial(lambda r: r ** (d - 1))
    i3 = radial(lambda r: r ** (d - 1) * ((r * r + a * a) ** 2 + 4.0 * r * r * a * a / d))
    return i1, i2, i3


TAIL_QUAD_RTOL = 1e-10  # quadrature is run at 1e-12; d = 2 makes the second bound an equality


def tail_check(gamma, R, d, x0_norm=0.0, rtol=TAIL_QUAD_RTOL):
    """Quadrature values, bounds and whether each ``value <= bound (1 + rtol)``."""
    vals = tail_integrals(gamma, R, d, x0_norm)
    bounds = gaussian_tail_bounds(gamma, R, d, x0_norm)
    return vals, bounds, tuple(v <= b * (1.0 + rtol) for v, b in zip(vals, bounds))


def erf_tail_bound(y, gamma):
    """``e^{-g y^2} / (2 g y)``, an upper bound for ``int_y^inf e^{-g x^2}`` when ``y >= 1``."""
    return math.exp(-gamma * y * y) / (2.0 * gamma * y)


def erf_tail(y, gamma):
    return 0.5 * math.sqrt(math.pi / gamma) * special.erfc(math.sqrt(gamma) * y)


# -- experiments ------------------------------------------------------------------

@dataclass
class SuperpositionReport:
    times: list
    measured_error: list
    bound: list  # theorem bound with the supplied c_d
    shape: list  # bound with c_d = 1
    gap_series: list
    gap_norm_t0: float
    t_delta_estimate: float
    t_delta_leading: float
    separation: SeparationData
    epsilon_zero: float
    c_d_fit: float = math.nan
    horizon: Optional[float] = None
    delta: float = 0.1
    completed: bool = True
    failure: Optional[str] = None
    mass_drift: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def admissible(self):
        return self.separation.epsilon < self.epsilon_zero

    def dominated(self, c=None, upto=None, floor=0.0):
        """True if ``measured <= c * shape + floor`` at every sample before ``upto``.

        ``c`` defaults to ``c_d_fit`` and ``upto`` to the horizon; ``floor`` is
        an optional additive allowance for discretization error.
        """
        c = self.c_d_fit if c is None else c
        upto = self.horizon if upto is None else upto
        for t, m, s in zip(self.times, self.measured_error, self.shape):
            if upto is not None and t > upto:
                break
            if m > (c * s + floor) * (1 + 1e-12):
                return False
        return True

    def to_dict(self):
        return {
            "separation": self.separation.to_dict(),
            "epsilon_zero": self.epsilon_zero,
            "admissible": self.admissible,
            "gap_norm_t0": self.gap_norm_t0,
            "t_delta_estimate": self.t_delta_estimate,
            "t_delta_leading": self.t_delta_leading,
            "c_d_fit": self.c_d_fit,
            "horizon": self.horizon,
            "delta": self.delta,
            "completed": self.completed,
            "failure": self.failure,
            "mass_drift": self.mass_drift,
            "dominated": self.dominated(),
            "n_samples": len(self.times),
            **self.extra,
        }

    def write(self, json_path, csv_path):
        dump_json(json_path, self.to_dict())
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "measured_error", "bound", "ratio", "gap_norm"])
            for t, m, b, g in zip(self.times, self.measured_error, self.bound, self.gap_series):
                w.writerow([repr(float(t)), repr(float(m)), repr(float(b)),
                            repr(float(m / b)) if b > 0 else "nan", repr(float(g))])


def fit_constant(times, measured, shape, upto=None):
    """``max measured/shape`` over samples with ``0 < t <= upto``."""
    best = 0.0
    for t, m, s in zip(times, measured, shape):
        if upto is not None and t > upto:
            break
        if t > 0 and s > 0:
            best = max(best, m / s)
    return best


def first_crossing(times, values, level):
    """Linearly interpolated first time ``values`` exceeds ``level`` (None if never)."""
    for i in range(1, len(times)):
        if values[i] > level:
            v0, v1 = values[i - 1], values[i]
            t0, t1 = times[i - 1], times[i]
            return t0 + (t1 - t0) * (level - v0) / (v1 - v0)
    return None


def _substeps(span, dt):
    """Step sizes covering ``span``: full steps then one shorter step."""
    if span <= 1e-12 * dt:
        return []
    n = max(1, int(math.ceil(span / dt - 1e-9)))
    last = span - (n - 1) * dt
    if abs(last - dt) < 1e-9 * dt:
        last = dt
    return [dt] * (n - 1) + [last]


def run_superposition(packets, grid, controls, t_end, sample_every, delta=0.1, c_d=1.0,
                      stop_at_horizon=False, track_gap=True, workers=None, progress=None):
    """Evolve the packet sum and compare with the sum of the exact packets.

    Samples ``||u(t) - G(t)||`` every ``sample_every`` time units, or at
    the listed times if a sequence is given (the last step before each
    sample is shortened to land on it exactly). A solver
    failure ends the run early with ``completed = False`` and the partial
    series kept.
    """
    check_shared_velocity(packets)
    d = grid.dim
    lam = controls.lam
    for p in packets:
        if p.lam != lam:
            raise ValueError(f"packet lambda {p.lam} differs from solver lambda {lam}")
    check_resolved(packets, grid)
    sep = separation(packets)
    eps0 = epsilon_zero(sep, d)
    g0 = sum_field(packets, 0.0, grid)
    m0 = mass(g0)

    if np.ndim(sample_every):
        sample_times = sorted({0.0, *(float(s) for s in sample_every)})
        if sample_times[-1] > t_end * (1 + 1e-12):
            raise ValueError("sample times must lie in [0, t_end]")
    else:
        n_samples = int(math.floor(t_end / sample_every + 1e-9))
        sample_times = [k * sample_every for k in range(n_samples + 1)]
        if t_end - sample_times[-1] > 1e-9 * sample_every:
            sample_times.append(t_end)

    rep = SuperpositionReport(
        times=[], measured_error=[], bound=[], shape=[], gap_series=[],
        gap_norm_t0=gap_norm(packets, 0.0, grid, check=False),
        t_delta_estimate=t_delta(delta, sep, lam, d, c_d),
        t_delta_leading=t_delta_leading(sep, lam),
        separation=sep, epsilon_zero=eps0, delta=delta)

    solver = SplitStepSolver(grid, controls, workers)
    u = g0.values.copy()
    t = 0.0
    for ts in sample_times:
        try:
            for h in _substeps(ts - t, controls.dt):
                u = solver.step(u, h)
                t += h
        except SolverError as exc:
            rep.completed = False
            rep.failure = f"solver failed at t={t!r}: {exc}"
            break
        t = ts
        exact = sum_field(packets, ts, grid)
        err = Field(grid, u).distance(exact)
        shape = float(bound_shape(ts, sep, lam, d))
        rep.times.append(ts)
        rep.measured_error.append(err if ts > 0 else 0.0)
        rep.shape.append(shape)
        rep.bound.append(c_d * shape)
        rep.gap_series.append(gap_norm(packets, ts, grid, check=False) if track_gap else math.nan)
        if progress is not None:
            progress(ts, err)
        if rep.horizon is None and err > delta:
            rep.horizon = first_crossing(rep.times, rep.measured_error, delta)
            if stop_at_horizon:
                break
    rep.mass_drift = abs(mass(Field(grid, u)) - m0) / m0 if m0 > 0 else 0.0
    rep.c_d_fit = fit_constant(rep.times, rep.measured_error, rep.shape, rep.horizon)
    return rep


def gronwall_residual(report, lam):
    """Worst excess of ``|d/dt ||w|||`` over ``2 lam ||w|| + 2 lam gap``.

    The derivative is a centered difference of the sampled error; ``gap``
    is the ``ln|.|`` gap norm, so ``2 lam gap`` is the ``ln|.|^2`` source.
    Returns ``max(lhs - rhs)`` over interior samples (<= 0 when satisfied).
    """
    t = np.asarray(report.times)
    w = np.asarray(report.measured_error)
    g = np.asarray(report.gap_series)
    if len(t) < 3:
        return -math.inf
    dw = (w[2:] - w[:-2]) / (t[2:] - t[:-2])
    rhs = 2.0 * lam * np.maximum(w[1:-1], w[2:]) + 2.0 * lam * np.maximum.reduce([g[:-2], g[1:-1], g[2:]])
    return float(np.max(np.abs(dw) - rhs))


def two_gaussons(distance, lam=1.0, d=1, omega=0.0):
    c = np.zeros(d)
    c[0] = distance / 2.0
    return [GaussianPacket.gausson(lam, -c, omega=omega), GaussianPacket.gausson(lam, c, omega=omega)]
