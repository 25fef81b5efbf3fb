import math
from fractions import Fraction

import numpy as np
import pytest

from carnot.numerics import (
    BumpFunction,
    QuadratureGrid,
    default_bump,
    default_grid,
    hardy_report,
    lp_norm,
    refine_study,
    sobolev_report,
)


def test_lp_norm_constant_and_scaling():
    grid = QuadratureGrid(((0, 1), (0, 1)), 8)
    ones = np.ones((8, 8))
    for p in (1, 1.5, 4, math.inf):
        assert lp_norm(ones, p, grid.cell_volume) == pytest.approx(1.0)
    f = np.linspace(-1, 1, 64)
    assert lp_norm(-3 * f, 2, 0.1) == pytest.approx(3 * lp_norm(f, 2, 0.1))
    with pytest.raises(ValueError):
        lp_norm(f, 0.5, 1.0)


def test_lp_norm_refinement_1d():
    def integral(n):
        grid = QuadratureGrid(((-1, 1),), n)
        x = grid.axis_nodes(0)
        return lp_norm((1 - x * x) ** 4, 1, grid.cell_volume)

    assert integral(64) == pytest.approx(integral(128), rel=0.01)
    assert integral(128) == pytest.approx(256 / 315, rel=1e-3)


def test_grid_avoids_origin():
    assert QuadratureGrid(((-1, 1), (-1, 1), (-1, 1)), 16).avoids_origin()
    assert not QuadratureGrid(((-1, 1), (-1, 1)), 3).avoids_origin()
    assert QuadratureGrid(((-1, 1), (0, 2)), 3).avoids_origin()


def test_bump_poly_and_support(h1):
    b = BumpFunction(2, Fraction(2))
    p = b.poly(h1)
    assert p((0, 0, 0)) == 1
    assert p((Fraction(1, 2), 0, 0)) == 0
    assert b.support_box(h1)[2] == (Fraction(-1, 4), Fraction(1, 4))
    a = np.array([0.0, 0.6])
    assert list(b.inside(h1, [a, np.zeros(2), np.zeros(2)])) == [True, False]


def test_sobolev_gradient_stable(h1):
    bumps = default_bump(h1, "gradient")
    r32 = sobolev_report(h1, "gradient", bumps, default_grid(h1, 32))
    r64 = sobolev_report(h1, "gradient", bumps, default_grid(h1, 64))
    assert math.isfinite(r32.ratio) and r32.ratio > 0
    assert r32.ratio == pytest.approx(r64.ratio, rel=0.02)
    assert r32.params["q"] == pytest.approx(4 / 3)


def test_ratio_invariant_under_scaling(h1):
    grid = default_grid(h1, 16)
    base = BumpFunction(4)
    scaled = BumpFunction(4, multiplier=(((0, 0, 0), -7),))
    r1 = sobolev_report(h1, "gradient", [base], grid)
    r2 = sobolev_report(h1, "gradient", [scaled], grid)
    assert r2.lhs == pytest.approx(7 * r1.lhs, rel=1e-12)
    assert r2.ratio == pytest.approx(r1.ratio, rel=1e-12)


def test_dilation_covariance(h1):
    lam = Fraction(2)
    r1 = sobolev_report(h1, "gradient", [BumpFunction(4)], default_grid(h1, 32))
    r2 = sobolev_report(h1, "gradient", [BumpFunction(4, lam)],
                        QuadratureGrid(tuple((-1 / lam ** w, 1 / lam ** w) for w in h1.weights), 32))
    factor = float(lam) ** (1 - h1.Q)
    assert r2.lhs == pytest.approx(factor * r1.lhs, rel=0.02)
    assert r2.rhs == pytest.approx(factor * r1.rhs, rel=0.02)
    assert r2.ratio == pytest.approx(r1.ratio, rel=0.02)


def test_support_and_smoothness_checks(h1):
    with pytest.raises(ValueError):
        sobolev_report(h1, "gradient", [BumpFunction(4)], QuadratureGrid(((-1, 1), (-1, 1), (-1, 0)), 8))
    with pytest.raises(ValueError):
        sobolev_report(h1, "gradient", [BumpFunction(2)], default_grid(h1, 8))
    with pytest.raises(ValueError):
        sobolev_report(h1, "gradient", [BumpFunction(4)], default_grid(h1, 7))
    with pytest.raises(ValueError):
        sobolev_report(h1, "korn", [BumpFunction(4)], default_grid(h1, 8))


def test_hardy_parameter_range(h1):
    bumps = default_bump(h1, "gradient")
    grid = default_grid(h1, 8)
    with pytest.raises(ValueError):
        hardy_report(h1, "gradient", bumps, 1, 4 / 3, grid)
    with pytest.raises(ValueError):
        hardy_report(h1, "gradient", bumps, 1, 1.34, grid)
    with pytest.raises(ValueError):
        hardy_report(h1, "gradient", bumps, 2, 1.0, grid)
    with pytest.raises(ValueError):
        hardy_report(h1, "gradient", bumps, 1, 0.9, grid)
    assert hardy_report(h1, "gradient", bumps, 1, 1.2, grid).params["p"] == 1.2


def test_hardy_insensitive_to_origin_when_supported_away(h1):
    b = BumpFunction(4, Fraction(2), (0, 0, Fraction(1, 2)))
    box = ((-1, 1), (-1, 1), (-1, 1))
    r32 = hardy_report(h1, "gradient", [b], 1, 1.0, QuadratureGrid(box, 32))
    r64 = hardy_report(h1, "gradient", [b], 1, 1.0, QuadratureGrid(box, 64))
    assert r32.lhs == pytest.approx(r64.lhs, rel=0.01)


def test_refine_study_pass_fail_degenerate(h1):
    bumps = default_bump(h1, "gradient")
    ok = refine_study(lambda n: sobolev_report(h1, "gradient", bumps, default_grid(h1, n)), [16, 32, 64])
    assert ok.status == "PASS" and ok.passed
    assert [r[0] for r in ok.rows] == [16, 32, 64]
    assert ok.report.history[-1][0] == 64
    coarse = refine_study(lambda n: sobolev_report(h1, "gradient", bumps, default_grid(h1, n)), [2, 4])
    assert coarse.status == "FAIL"
    zero = [BumpFunction(4, multiplier=(((1, 0, 0), 0),))]
    deg = refine_study(lambda n: sobolev_report(h1, "gradient", zero, default_grid(h1, n)), [4, 8])
    assert deg.status == "DEGENERATE"
    with pytest.raises(ValueError):
        refine_study(lambda n: None, [8])


def test_csv_export(h1):
    bumps = default_bump(h1, "gradient")
    table = refine_study(lambda n: sobolev_report(h1, "gradient", bumps, default_grid(h1, n)), [4, 8])
    lines = table.to_csv().splitlines()
    assert lines[0] == "n,lhs,rhs,ratio" and lines[1].startswith("4,")


def test_thread_count_does_not_change_sums(h1, monkeypatch):
    bumps = default_bump(h1, "korn")
    grid = default_grid(h1, 24)
    monkeypatch.setenv("CARNOT_THREADS", "1")
    a = sobolev_report(h1, "korn", bumps, grid)
    monkeypatch.setenv("CARNOT_THREADS", "4")
    b = sobolev_report(h1, "korn", bumps, grid)
    assert (a.lhs, a.rhs) == (b.lhs, b.rhs)


def test_korn_report_finite(h1):
    bumps = default_bump(h1, "korn")
    r = sobolev_report(h1, "korn", bumps, default_grid(h1, 16))
    assert math.isfinite(r.ratio) and r.rhs > 0
    assert len(r.function["components"]) == 2


def test_report_json(h1):
    r = sobolev_report(h1, "gradient", default_bump(h1, "gradient"), default_grid(h1, 8))
    data = r.to_json()
    assert data["grid"]["n"] == 8 and data["function"]["components"][0]["power"] == 4
