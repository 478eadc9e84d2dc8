"""JSON experiment configs and their validation.

Every validator raises :class:`ConfigError` whose message starts with the
dotted path of the offending field, e.g. ``packets[1].shape_re[0][1]``.
"""

import json
import math

import numpy as np

from .breather import BreatherParam
from .gaussian import GaussianPacket, ShapeError, ShapeMatrix
from .spectral import Grid, SolverControls


class ConfigError(ValueError):
    pass


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def _get(doc, key, where, default=..., kind=None):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where or '<root>'}: expected an object")
    path = f"{where}.{key}" if where else key
    if key not in doc:
        if default is ...:
            raise ConfigError(f"{path}: missing required field")
        return default
    return _check(doc[key], path, kind)


def _check(v, path, kind):
    if kind is None:
        return v
    if kind == "number":
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{path}: expected a finite number, got {v!r}")
        return float(v)
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{path}: expected an integer, got {v!r}")
        return v
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(f"{path}: expected true or false, got {v!r}")
        return v
    if kind == "list":
        if not isinstance(v, list):
            raise ConfigError(f"{path}: expected a list, got {v!r}")
        return v
    raise AssertionError(kind)


def _positive(v, path):
    if not v > 0:
        raise ConfigError(f"{path}: must be positive, got {v!r}")
    return v


def _vector(v, path, d):
    _check(v, path, "list")
    if len(v) != d:
        raise ConfigError(f"{path}: expected {d} components, got {len(v)}")
    return [_check(x, f"{path}[{i}]", "number") for i, x in enumerate(v)]


def _matrix(v, path, d):
    _check(v, path, "list")
    if len(v) != d:
        raise ConfigError(f"{path}: expected {d} rows, got {len(v)}")
    return [_vector(row, f"{path}[{i}]", d) for i, row in enumerate(v)]


def parse_grid(doc, where, dim):
    g = _get(doc, "grid", where)
    gw = f"{where}.grid" if where else "grid"
    L = _positive(_get(g, "L", gw, kind="number"), f"{gw}.L")
    n = _get(g, "n", gw, kind="int")
    try:
        return Grid(dim, L, n)
    except ValueError as exc:
        raise ConfigError(f"{gw}: {exc}") from None


def parse_packet(doc, path, dim, lam):
    re = _matrix(_get(doc, "shape_re", path), f"{path}.shape_re", dim)
    im = _matrix(_get(doc, "shape_im", path, default=[[0.0] * dim for _ in range(dim)]),
                 f"{path}.shape_im", dim)
    for name, m in (("shape_re", re), ("shape_im", im)):
        for i in range(dim):
            for j in range(i + 1, dim):
                if abs(m[i][j] - m[j][i]) > 1e-12 * max(1.0, abs(m[i][j])):
                    raise ConfigError(f"{path}.{name}[{i}][{j}]: matrix is not symmetric "
                                      f"({m[i][j]!r} vs [{j}][{i}] = {m[j][i]!r})")
    try:
        shape = ShapeMatrix(np.array(re), np.array(im))
        return GaussianPacket(
            shape,
            omega=_get(doc, "omega", path, 0.0, "number"),
            center=_vector(_get(doc, "center", path, [0.0] * dim), f"{path}.center", dim),
            velocity=_vector(_get(doc, "velocity", path, [0.0] * dim), f"{path}.velocity", dim),
            theta=_get(doc, "theta", path, 0.0, "number"),
            lam=lam)
    except ShapeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_packets(doc, dim, lam, where=""):
    items = _get(doc, "packets", where, kind="list")
    if not items:
        raise ConfigError(f"{where + '.' if where else ''}packets: need at least one packet")
    base = f"{where}.packets" if where else "packets"
    packets = [parse_packet(p, f"{base}[{i}]", dim, lam) for i, p in enumerate(items)]
    v0 = packets[0].velocity
    for i, p in enumerate(packets[1:], start=1):
        if not np.array_equal(p.velocity, v0):
            raise ConfigError(f"{base}[{i}].velocity: all packets must share one velocity "
                              f"({p.velocity.tolist()} vs {v0.tolist()})")
    return packets


def parse_common(doc):
    lam = _positive(_get(doc, "lambda", "", kind="number"), "lambda")
    dim = _get(doc, "dimension", "", 1, "int")
    if dim not in (1, 2):
        raise ConfigError(f"dimension: solver supports 1 or 2, got {dim}")
    grid = parse_grid(doc, "", dim)
    dt = _positive(_get(doc, "dt", "", kind="number"), "dt")
    try:
        controls = SolverControls(dt, lam, _get(doc, "eta", "", 1e-30, "number"))
    except ValueError as exc:
        raise ConfigError(f"dt: {exc}") from None
    t_end = _get(doc, "t_end", "", kind="number")
    if t_end < 0:
        raise ConfigError(f"t_end: must be >= 0, got {t_end}")
    return lam, dim, grid, controls, t_end


def parse_superpose(doc):
    lam, dim, grid, controls, t_end = parse_common(doc)
    packets = parse_packets(doc, dim, lam)
    snaps = _get(doc, "snapshots", "", 1.0)
    if isinstance(snaps, list):
        times = [_check(s, f"snapshots[{i}]", "number") for i, s in enumerate(snaps)]
        if any(s < 0 or s > t_end for s in times):
            raise ConfigError("snapshots: times must lie in [0, t_end]")
        if times != sorted(times):
            raise ConfigError("snapshots: times must be sorted")
        sample = times
    else:
        sample = _positive(_check(snaps, "snapshots", "number"), "snapshots")
    delta = _positive(_get(doc, "delta", "", 0.1, "number"), "delta")
    c_d = _positive(_get(doc, "c_d", "", 1.0, "number"), "c_d")
    stop = _get(doc, "stop_at_horizon", "", False, "bool")
    floor = _get(doc, "error_floor", "", 0.0, "number")
    if floor < 0:
        raise ConfigError(f"error_floor: must be >= 0, got {floor}")
    return {"error_floor": floor, "lam": lam, "dim": dim, "grid": grid, "controls": controls, "t_end": t_end,
            "packets": packets, "sample": sample, "delta": delta, "c_d": c_d,
            "stop_at_horizon": stop}


def parse_evolve(doc):
    lam, dim, grid, controls, t_end = parse_common(doc)
    packets = parse_packets(doc, dim, lam)
    snaps = _get(doc, "snapshots", "", [t_end], "list")
    times = [_check(s, f"snapshots[{i}]", "number") for i, s in enumerate(snaps)]
    if any(s < 0 or s > t_end for s in times):
        raise ConfigError("snapshots: times must lie in [0, t_end]")
    monitor = _get(doc, "monitor_every", "", 100, "int")
    if monitor < 0:
        raise ConfigError("monitor_every: must be >= 0")
    return {"lam": lam, "dim": dim, "grid": grid, "controls": controls, "t_end": t_end,
            "packets": packets, "snapshots": times, "monitor_every": monitor}


def parse_breather_param(doc, path):
    lam = _positive(_get(doc, "lambda", path, kind="number"), f"{path}.lambda" if path else "lambda")
    if "gamma" in doc:
        g = _vector(doc["gamma"], f"{path}.gamma" if path else "gamma", 2)
        if not g[0] > 0:
            raise ConfigError(f"{path + '.' if path else ''}gamma[0]: must be positive, got {g[0]}")
        return BreatherParam.from_gamma(complex(g[0], g[1]), lam)
    a_r = _get(doc, "alpha_r", path, kind="number")
    if not a_r > 0:
        raise ConfigError(f"{path + '.' if path else ''}alpha_r: must be positive, got {a_r}")
    return BreatherParam(a_r, _get(doc, "alpha_i", path, 0.0, "number"), lam)


def parse_breather(doc):
    param = parse_breather_param(doc, "")
    periods = _get(doc, "periods", "", 2.0, "number")
    _positive(periods, "periods")
    n = _get(doc, "n_samples", "", 2001, "int")
    if n < 2:
        raise ConfigError("n_samples: must be >= 2")
    tol = _positive(_get(doc, "energy_tolerance", "", 1e-9, "number"), "energy_tolerance")
    return {"param": param, "periods": periods, "n_samples": n, "energy_tolerance": tol}


def parse_period(doc):
    """Returns ``(levels, alphas, oracle, errors)``; invalid entries go to ``errors``."""
    energies = _get(doc, "energies", "", [], "list")
    alphas_doc = _get(doc, "alphas", "", [], "list")
    if not energies and not alphas_doc:
        raise ConfigError("energies: provide a non-empty energy grid or an alphas list")
    levels, errors = [], []
    for i, e in enumerate(energies):
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not math.isfinite(e):
            errors.append(f"energies[{i}]: expected a finite number, got {e!r}")
        elif not e > 1:
            errors.append(f"energies[{i}]: energy must exceed 1, got {e!r}")
        else:
            levels.append(float(e))
    alphas = []
    for i, a in enumerate(alphas_doc):
        try:
            alphas.append(parse_breather_param(a, f"alphas[{i}]"))
        except (ConfigError, ValueError) as exc:
            errors.append(str(exc))
    return {"energies": sorted(levels), "alphas": alphas,
            "oracle": _get(doc, "oracle", "", True, "bool"), "errors": errors}


def parse_lemmas(doc):
    n = _get(doc, "samples", "", 100000, "int")
    if n < 1:
        raise ConfigError("samples: must be >= 1")
    tails = _get(doc, "tail_checks", "", 200, "int")
    if tails < 0:
        raise ConfigError("tail_checks: must be >= 0")
    dims = _get(doc, "tail_dimensions", "", [1, 2, 3], "list")
    for i, d in enumerate(dims):
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise ConfigError(f"tail_dimensions[{i}]: expected a positive integer, got {d!r}")
    return {"samples": n, "tail_checks": tails, "tail_dimensions": dims}
