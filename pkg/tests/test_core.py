import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frozen_sl import (
    CaseLabel,
    ConstantFunction,
    Grid,
    Identity,
    Matrix,
    Potential,
    ProblemConfig,
    Scalar,
    Spectrum,
    WFunction,
    asymptotic_rho,
    classify_case,
    spectrum_residuals,
)
from frozen_sl.core import panel_interpolate


@pytest.mark.parametrize(
    "alpha,beta,k,label",
    [
        (0, 0, 1, CaseLabel.I), (0, 0, 4, CaseLabel.I),
        (1, 0, 3, CaseLabel.II), (1, 0, 2, CaseLabel.V),
        (1, 1, 2, CaseLabel.III), (1, 1, 3, CaseLabel.VI),
        (0, 1, 2, CaseLabel.IV), (0, 1, 5, CaseLabel.IV),
    ],
)
def test_classify_case(alpha, beta, k, label):
    cfg = ProblemConfig(alpha, beta, k)
    assert classify_case(cfg) is label
    assert cfg.degenerate == label.degenerate


def test_config_constants():
    cfg = ProblemConfig(1, 1, 3)
    assert (cfg.b, cfg.c, cfg.sign) == (1, 1, -1)
    assert math.isclose(cfg.a, math.pi / 3)
    assert ProblemConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [dict(alpha=2, beta=0, k=1), dict(alpha=0, beta=0, k=0),
                                 dict(alpha=0, beta=0, k=1.5)])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        ProblemConfig(**bad)


def test_from_dict_rejects_missing_and_float_k():
    with pytest.raises(ValueError):
        ProblemConfig.from_dict({"alpha": 0, "beta": 0})
    with pytest.raises(ValueError):
        ProblemConfig.from_dict({"alpha": 0, "beta": 0, "k": 2.0})


def test_asymptotic_rho():
    assert asymptotic_rho(3, ProblemConfig(0, 0, 1)) == 3
    assert asymptotic_rho(3, ProblemConfig(0, 1, 1)) == 2.5
    assert asymptotic_rho(3, ProblemConfig(1, 1, 1)) == 2
    with pytest.raises(ValueError):
        asymptotic_rho(0, ProblemConfig(0, 0, 1))


@pytest.mark.parametrize("kind", ["gauss", "midpoint"])
@pytest.mark.parametrize("k", [1, 2, 5])
def test_grid_symmetric_and_integrates(kind, k):
    g = Grid(k, 64, kind)
    s = g.ref_nodes
    assert np.allclose(s + s[::-1], 1.0)
    assert g.points.shape == (g.size,)
    assert np.all(np.diff(g.points) > 0)
    tol = 1e-13 if kind == "gauss" else 1e-6
    assert abs(g.integrate(np.cos(g.points) ** 2) - math.pi / 2) < tol
    assert abs(g.integrate(np.ones(g.size)) - math.pi) < 1e-12


def test_midpoint_points_are_uniform_cell_centres():
    k, m = 3, 10
    g = Grid(k, m, "midpoint")
    expect = (np.arange(k * m) + 0.5) * math.pi / (k * m)
    assert np.allclose(g.points, expect)


def test_midpoint_rule_is_fourth_order():
    errs = []
    for m in (16, 32, 64):
        g = Grid(2, m, "midpoint")
        errs.append(abs(g.integrate(np.exp(g.points)) - (math.exp(math.pi) - 1)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5)


def test_for_frequency_grows():
    assert Grid.for_frequency(2, 200).m > Grid.for_frequency(2, 20).m >= 48


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=9))
def test_cos_roundtrip(coeffs):
    g = Grid(3, 8 * (len(coeffs) + 1))
    q = Potential.from_cos(coeffs, g)
    back = Potential(g, q.values).to_cos(len(coeffs) - 1)
    assert np.allclose(back, coeffs, atol=1e-10)


def test_potential_shape_check():
    with pytest.raises(ValueError):
        Potential(Grid(2, 8), np.zeros(15))


def test_panel_interpolate_gauss_exact_for_polynomials():
    src, dst = Grid(2, 12), Grid(2, 20, "midpoint")
    f = lambda x: x**5 - 2 * x
    out = panel_interpolate(f(src.points), src, dst)
    assert np.allclose(out, f(dst.points), atol=1e-11)


def test_resample_uses_series():
    q = Potential.from_cos([1, 0.5, 0.25], Grid(2, 20))
    r = q.resample(Grid(2, 33))
    assert np.allclose(r.values, q(r.grid.points))


@pytest.mark.parametrize("alpha,beta", [(0, 0), (1, 1), (0, 1), (1, 0)])
def test_wfunction_norm_and_coeffs(alpha, beta):
    c = np.array([0.3, -1.0, 0.5j, 2.0])
    W = WFunction(alpha, beta, coeffs=c)
    g = Grid(2, 60)
    Wg = WFunction(alpha, beta, g, W.sample(g))
    assert math.isclose(W.l2_norm(), Wg.l2_norm(), rel_tol=1e-12)
    n = len(c) - 1 if alpha == beta else len(c)
    assert np.allclose(Wg.to_coeffs(n), c, atol=1e-12)
    assert abs(W.mean() - Wg.mean()) < 1e-12


def test_wfunction_needs_data():
    with pytest.raises(ValueError):
        WFunction(0, 0)
    with pytest.raises(ValueError):
        WFunction(0, 0, values=np.zeros(4))


def test_spectrum_residuals_zero_for_unperturbed():
    cfg = ProblemConfig(0, 1, 2)
    kappa, ok = spectrum_residuals(Spectrum.unperturbed(cfg, 30))
    assert np.allclose(kappa, 0) and ok


def test_spectrum_residuals_flags_growth():
    cfg = ProblemConfig(0, 0, 1)
    n = np.arange(1, 41)
    _, ok = spectrum_residuals(Spectrum((n + 0.3) ** 2, cfg))
    assert not ok


def test_restriction_operators():
    g = Grid(2, 10)
    rhs = np.linspace(1, 2, 10)
    assert np.allclose(Identity().solve_identity_plus(rhs, g), rhs / 2)
    kap = Scalar(0.5 + 0.5j)
    u = kap.solve_identity_plus(rhs, g)
    assert np.allclose(u + kap.apply(u, g), rhs)
    with pytest.raises(ValueError):
        Scalar(-1)
    p = ConstantFunction(lambda x: 1 + x)
    u = p.solve_identity_plus(rhs, g)
    assert np.allclose(u + p.apply(u, g), rhs)
    M = Matrix(np.diag(np.arange(10) / 10))
    u = M.solve_identity_plus(rhs, g)
    assert np.allclose(u + M.apply(u, g), rhs)
    with pytest.raises(ValueError):
        Matrix(-np.eye(3))
    with pytest.raises(ValueError):
        M.apply(rhs, Grid(2, 12))
