import mpmath as mp
import pytest

from lognls_lab.breather import BreatherParam, EnergyLevel
from lognls_lab.period import (SMALL_OSCILLATION_PERIOD, continuity_scan, gamma_at_level,
                               max_adjacent_jump, period_alpha, period_asymptotic,
                               period_ode_oracle, period_quadrature, write_scan_csv)

# Independent oracle: T(E) = 2 int dtau / sqrt(E - 1/tau^2 - 2 ln tau) between the
# turning points, by mpmath tanh-sinh at 30 digits (frozen below).
FROZEN = {2.0: 7.08917533176133, 4.0: 18.7169498147369}


def _bisect(f, a, b, n=120):
    fa = f(a)
    for _ in range(n):
        m = (a + b) / 2
        if (f(m) > 0) == (fa > 0):
            a, fa = m, f(m)
        else:
            b = m
    return (a + b) / 2


def mp_period(e):
    with mp.workdps(30):
        e = mp.mpf(e)
        g = lambda x: 1 / x ** 2 + 2 * mp.log(x) - e
        lo = _bisect(g, mp.mpf("1e-3"), mp.mpf(1))
        hi = _bisect(g, mp.mpf(1), mp.e ** (e / 2) + 1)
        f = lambda x: 1 / mp.sqrt(abs(g(x)))  # abs: roots are only known to ~1e-36
        return float(2 * mp.quad(f, [lo, 1, hi]))


@pytest.mark.parametrize("e", sorted(FROZEN))
def test_quadrature_matches_mpmath_oracle(e):
    assert mp_period(e) == pytest.approx(FROZEN[e], rel=1e-12)
    assert period_quadrature(EnergyLevel(e)).period == pytest.approx(FROZEN[e], rel=1e-12)


@pytest.mark.parametrize("e", [1.2, 2.5, 10.0, 20.0, 30.0])
def test_quadrature_matches_ode_oracle(e):
    q = period_quadrature(EnergyLevel(e)).period
    o = period_ode_oracle(gamma_at_level(e)).period
    assert q == pytest.approx(o, rel=1e-10)


def test_small_oscillation_limit():
    t = period_quadrature(EnergyLevel.from_excess(1e-8)).period
    assert t == pytest.approx(SMALL_OSCILLATION_PERIOD, rel=1e-7)
    assert period_alpha(BreatherParam.gausson(2.0)).period == pytest.approx(
        SMALL_OSCILLATION_PERIOD / 4.0, rel=1e-15)


def test_asymptotic_ratio_tends_to_one():
    ratios = [period_quadrature(EnergyLevel(e)).period / period_asymptotic(EnergyLevel(e)).period
              for e in (6.0, 8.0, 10.0, 12.0)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    # frozen: ratio at E = 12 from the quadrature (cross-checked against the ODE oracle)
    assert ratios[-1] == pytest.approx(1.000038, abs=2e-6)


def test_period_alpha_physical_units():
    p = BreatherParam.from_gamma(2.0, 1.0)
    assert period_alpha(p).period == pytest.approx(2.98488613, rel=1e-8)


def test_continuity_scan(tmp_path):
    grid = [1.01, 1.5, 2.0, 2.5, 3.0]
    rows = continuity_scan(grid, oracle=True, threads=2)
    assert [r.e_gamma for r in rows] == grid
    assert all(abs(r.ratio_oracle - 1) < 1e-10 for r in rows)
    assert max_adjacent_jump(rows) < 2.5  # T(3) - T(2.5) = 2.46
    write_scan_csv(rows, tmp_path / "p.csv")
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 6


def test_continuity_scan_rejects_bad_grids():
    with pytest.raises(ValueError):
        continuity_scan([1.0, 2.0])
    with pytest.raises(ValueError):
        continuity_scan([3.0, 2.0])
