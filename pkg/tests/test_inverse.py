import numpy as np
import pytest

from frozen_sl import (
    CaseError,
    CharFn,
    compute_spectrum,
    eval_delta_direct,
    extract_W,
    Grid,
    Identity,
    isospectral_family,
    NotRealizableError,
    Potential,
    ProblemConfig,
    reconstruct_delta,
    recover_degenerate,
    recover_nondegenerate,
    solve_panelwise,
    Spectrum,
    WFunction,
)
from frozen_sl.inverse import choose_degree, panel_reprojection
from frozen_sl.operators import solve_main_nondegenerate, w_from_q_matrix

from conftest import ALL_CONFIGS, make_rng, random_cos_potential

FOUR = [(0, 0), (0, 1), (1, 0), (1, 1)]


@pytest.mark.parametrize("alpha,beta", FOUR)
def test_reconstructed_delta_of_unperturbed_spectrum(alpha, beta):
    cfg = ProblemConfig(alpha, beta, 2)
    delta = reconstruct_delta(Spectrum.unperturbed(cfg, 40))
    assert delta.sign == (-1) ** alpha
    lam = np.array([0.3, 7.0 + 3j, 55.0, -20.0])
    direct = eval_delta_direct(lam, Potential.zero(Grid(2, 32)), cfg)
    assert np.allclose(delta(lam), direct, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("cfg", [ProblemConfig(0, 1, 2), ProblemConfig(1, 1, 3), ProblemConfig(0, 0, 2)],
                         ids=str)
def test_reconstructed_delta_vanishes_at_data(cfg):
    q = random_cos_potential(make_rng(3), cfg.k, rho_max=50)
    spec = compute_spectrum(q, cfg, 40)
    delta = reconstruct_delta(spec, 40)
    vals = np.abs(delta(spec.values))
    assert np.all(vals <= 1e-10 * np.maximum(1, np.abs(spec.values)))


def test_reconstructed_delta_rejects_tail_collision():
    cfg = ProblemConfig(0, 0, 1)
    vals = (np.arange(1, 11) ** 2).astype(float)
    vals[4] = 144.0  # equals the unperturbed value with index 12
    with pytest.raises(ValueError, match="index 5"):
        reconstruct_delta(Spectrum(vals, cfg))


@pytest.mark.parametrize("cfg", [c for c in ALL_CONFIGS], ids=str)
def test_extract_inverts_evaluation(cfg):
    rng = make_rng(cfg.k)
    n = 8
    size = n + 1 if cfg.alpha == cfg.beta else n
    c = rng.normal(size=size) + 1j * rng.normal(size=size)
    if cfg.alpha == cfg.beta == 0:
        c[0] = 0  # the mean does not enter this kernel
    W = WFunction(cfg.alpha, cfg.beta, coeffs=c)
    back = extract_W(CharFn(cfg, W), cfg, n)
    assert np.max(np.abs(back.coeffs - c)) < 1e-12


def test_panel_reprojection_removes_gibbs():
    cfg = ProblemConfig(0, 1, 2)
    g = Grid(2, 60)
    q = Potential.from_cos([1.0, 0.5], g)
    W = w_from_q_matrix(q, cfg)
    coeffs = W.to_coeffs(60)
    series = WFunction(0, 1, coeffs=coeffs)
    plain = np.sqrt(g.integrate(np.abs(series.sample(g) - W.values) ** 2).real)
    rep = panel_reprojection(series, g)
    refit = np.sqrt(g.integrate(np.abs(rep.values - W.values) ** 2).real)
    assert refit < 1e-3 * plain
    assert choose_degree(series, 2) is not None


def test_choose_degree_keeps_smooth_series():
    W = WFunction(1, 1, coeffs=[0.2, 1.0, -0.5, 0.25] + [0.0] * 20)
    assert choose_degree(W, 3) is None


@pytest.mark.parametrize("cfg", [c for c in ALL_CONFIGS if not c.degenerate], ids=str)
def test_panelwise_solve_matches_matrix_solve(cfg):
    q = random_cos_potential(make_rng(11), cfg.k, rho_max=20)
    W = w_from_q_matrix(q, cfg)
    a = solve_panelwise(W, cfg)
    b = solve_main_nondegenerate(W, cfg)
    assert np.max(np.abs(a.values - b.values)) < 1e-10
    assert np.max(np.abs(a.values - q.values)) < 1e-10


def test_panelwise_solve_rejects_degenerate():
    cfg = ProblemConfig(0, 0, 2)
    with pytest.raises(CaseError):
        solve_panelwise(WFunction.zero(cfg, Grid(2, 8)), cfg)


def test_inverse_of_unperturbed_spectrum_is_zero():
    cfg = ProblemConfig(0, 1, 2)
    q = recover_nondegenerate(Spectrum.unperturbed(cfg, 60), cfg)
    assert np.max(np.abs(q.values)) < 1e-10


def test_inverse_constant_one_11_k3():
    cfg = ProblemConfig(1, 1, 3)
    q = Potential.from_cos([1.0], Grid.for_frequency(3, 62))
    spec = compute_spectrum(q, cfg, 60)
    q_hat = recover_nondegenerate(spec, cfg)
    assert np.max(np.abs(q_hat.values - 1)) < 1e-6


def test_inverse_rejects_wrong_case():
    with pytest.raises(CaseError):
        recover_nondegenerate(Spectrum.unperturbed(ProblemConfig(0, 0, 2), 20), ProblemConfig(0, 0, 2))
    with pytest.raises(CaseError):
        recover_degenerate(Spectrum.unperturbed(ProblemConfig(0, 1, 2), 20), ProblemConfig(0, 1, 2), Identity())


def test_degenerate_inverse_trivial_and_constant():
    cfg = ProblemConfig(0, 0, 2)
    q0 = recover_degenerate(Spectrum.unperturbed(cfg, 60), cfg, Identity())
    assert np.max(np.abs(q0.values)) < 1e-10
    q = Potential.from_cos([1.0], Grid.for_frequency(2, 62))
    spec = compute_spectrum(q, cfg, 60)
    q_hat = recover_degenerate(spec, cfg, Identity())
    assert np.max(np.abs(q_hat.values - 1)) < 1e-4
    (q_p,) = isospectral_family(spec, cfg, [lambda x: np.ones_like(x)])
    assert np.max(np.abs(q_p.values - q_hat.values)) < 1e-4


def test_degenerate_inverse_rejects_perturbed_forced_value():
    cfg = ProblemConfig(1, 1, 2)
    vals = Spectrum.unperturbed(cfg, 30).values.copy()
    vals[1] += 0.1
    with pytest.raises(NotRealizableError):
        recover_degenerate(Spectrum(vals, cfg), cfg, Identity())


def test_isospectral_family_prescribes_first_panel():
    cfg = ProblemConfig(0, 0, 2)
    spec = Spectrum.unperturbed(cfg, 40)
    p = lambda x: np.cos(3 * x) + 1j * x
    (q,) = isospectral_family(spec, cfg, [p])
    t = q.grid.block_nodes
    # q(x) = p(a - x) on (0, a)
    assert np.allclose(q.blocks[0], p(q.grid.a - t), atol=1e-12)
    assert isospectral_family(spec, cfg, []) == []


def test_spectrum_config_mismatch():
    spec = Spectrum.unperturbed(ProblemConfig(0, 1, 2), 20)
    with pytest.raises(ValueError):
        recover_nondegenerate(spec, ProblemConfig(0, 1, 3))
