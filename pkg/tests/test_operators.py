import itertools

import numpy as np
import pytest

from frozen_sl import (
    CaseError,
    ConstantFunction,
    Grid,
    Identity,
    Potential,
    ProblemConfig,
    Scalar,
    WFunction,
)
from frozen_sl.operators import (
    apply_Q,
    apply_Qm,
    apply_R,
    apply_Rm,
    build_A,
    degeneration_residual_W,
    det_A_closed,
    det_exact,
    invert_Q,
    invert_R,
    first_panel_from_W,
    reflected,
    shifted,
    solve_main_degenerate,
    solve_main_nondegenerate,
    w_from_q_matrix,
    w_from_q_piecewise,
)

from conftest import make_rng

CONFIGS = [ProblemConfig(a, b, k) for a, b in itertools.product((0, 1), repeat=2) for k in range(1, 7)]


def _random_q(rng, k, m=24, modes=7):
    g = Grid(k, m)
    return Potential.from_cos(rng.normal(size=modes) + 1j * rng.normal(size=modes), g)


def test_shift_and_reflection_on_grid():
    g = Grid(3, 9)
    f = np.exp(g.points).reshape(3, 9)
    t = g.block_nodes
    assert np.allclose(shifted(f, 2), np.exp(2 * g.a + t))
    assert np.allclose(reflected(f, 2), np.exp(2 * g.a - t))


@pytest.mark.parametrize("k", [1, 2, 3, 6])
def test_R_Q_are_invertible_rearrangements(k):
    cfg = ProblemConfig(0, 1, k)
    f = make_rng(k).normal(size=(k, 11))
    assert np.array_equal(invert_R(apply_R(f, cfg), cfg), f)
    assert np.array_equal(invert_Q(apply_Q(f, cfg), cfg), f)


def test_Rm_Qm_index_maps():
    cfg = ProblemConfig(0, 0, 4)
    g = Grid(4, 5)
    f = g.points.reshape(4, 5)
    t = g.block_nodes
    a = g.a
    assert np.allclose(apply_Rm(f, 1, cfg), t + 3 * a)
    assert np.allclose(apply_Rm(f, 2, cfg), 3 * a - t)
    assert np.allclose(apply_Qm(f, 1, cfg), t)
    assert np.allclose(apply_Qm(f, 2, cfg), 2 * a - t)
    with pytest.raises(ValueError):
        apply_Rm(f, 5, cfg)


@pytest.mark.parametrize("cfg", [c for c in CONFIGS if c.k > 1], ids=str)
def test_A_pattern(cfg):
    A = np.asarray(build_A(cfg))
    k = cfg.k
    assert A[0, 0] == 1 and A[k - 1, k - 1] == cfg.c
    assert np.all(np.diag(A, 1) == cfg.b) and np.all(np.diag(A, -1) == cfg.c)
    assert det_exact(A) == det_A_closed(cfg)


def test_det_exact_known_values():
    assert det_exact([[2, 1], [1, 1]]) == 1
    assert det_exact([[1, 2], [2, 4]]) == 0
    assert det_exact([[0, 1], [1, 0]]) == -1


@pytest.mark.parametrize("cfg", CONFIGS, ids=str)
def test_w_paths_agree(cfg):
    q = _random_q(make_rng(cfg.k), cfg.k)
    Wm = w_from_q_matrix(q, cfg)
    Wp = w_from_q_piecewise(q, cfg)
    assert np.max(np.abs(Wm.values - Wp.values)) <= 1e-12 * max(1, np.max(np.abs(Wm.values)))


def test_w_of_constant_is_panelwise_constant():
    # the characteristic function built from W must match the direct oracle
    from frozen_sl.forward import eval_delta_direct, eval_delta_W

    cfg = ProblemConfig(0, 0, 2)
    g = Grid(2, 16)
    q = Potential.from_cos([1.0], g)
    W = w_from_q_matrix(q, cfg)
    assert np.ptp(W.blocks[0].real) < 1e-14 and np.ptp(W.blocks[1].real) < 1e-14
    lam = np.array([0.7, 5.0 + 2j, -3.0])
    assert np.allclose(eval_delta_W(lam, W, cfg), eval_delta_direct(lam, q, cfg), atol=1e-12)


@pytest.mark.parametrize("cfg", [c for c in CONFIGS if not c.degenerate], ids=str)
def test_nondegenerate_roundtrip_and_direct_panel(cfg):
    q = _random_q(make_rng(10 + cfg.k), cfg.k)
    W = w_from_q_matrix(q, cfg)
    back = solve_main_nondegenerate(W, cfg)
    assert np.max(np.abs(back.values - q.values)) < 1e-12
    assert np.allclose(first_panel_from_W(W, cfg), q.blocks[0], atol=1e-12)


@pytest.mark.parametrize("cfg", [c for c in CONFIGS if c.degenerate], ids=str)
def test_degenerate_identity_holds_for_any_q(cfg):
    q = _random_q(make_rng(20 + cfg.k), cfg.k)
    W = w_from_q_matrix(q, cfg)
    assert degeneration_residual_W(W, cfg) < 1e-12 * max(1.0, W.l2_norm())
    with pytest.raises(CaseError):
        solve_main_nondegenerate(W, cfg)
    with pytest.raises(CaseError):
        first_panel_from_W(W, cfg)


def _even_about_a(k, g, rng):
    # symmetric about a: build from a function of (x - a)^2
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    x = g.points - g.a
    return Potential(g, sum(cj * np.cos(j * x) for j, cj in enumerate(c)))


@pytest.mark.parametrize("cfg", [c for c in CONFIGS if c.degenerate and c.k > 1], ids=str)
def test_degenerate_solve_recovers_with_matching_K(cfg):
    g = Grid(cfg.k, 24)
    q = _even_about_a(cfg.k, g, make_rng(30 + cfg.k))
    W = w_from_q_matrix(q, cfg)
    back = solve_main_degenerate(W, cfg, Identity())
    assert np.max(np.abs(back.values - q.values)) < 1e-10
    # prescribing q on (0, a) instead reproduces q as well
    p = q.blocks[0][::-1]
    back = solve_main_degenerate(W, cfg, ConstantFunction(p))
    assert np.max(np.abs(back.values - q.values)) < 1e-10


@pytest.mark.parametrize("cfg", [ProblemConfig(0, 0, 3), ProblemConfig(1, 1, 4)], ids=str)
def test_degenerate_solution_reproduces_W(cfg):
    g = Grid(cfg.k, 20)
    q = _random_q(make_rng(40), cfg.k, m=20)
    W = w_from_q_matrix(q, cfg)
    for K in (Identity(), Scalar(0.3j)):
        sol = solve_main_degenerate(W, cfg, K)
        assert np.allclose(w_from_q_matrix(sol, cfg).values, W.values, atol=1e-10)
        # the restriction holds by construction
        blocks = sol.blocks
        assert np.allclose(reflected(blocks, 1), K.apply(shifted(blocks, 1), g), atol=1e-12)


def test_degenerate_free_block():
    cfg = ProblemConfig(0, 0, 4)
    q = _random_q(make_rng(50), 4)
    W = w_from_q_matrix(q, cfg)
    for j in range(1, 5):
        sol = solve_main_degenerate(W, cfg, free_block=j, block_values=q.blocks[j - 1])
        assert np.max(np.abs(sol.values - q.values)) < 1e-10


def test_degenerate_rejects_inconsistent_W():
    cfg = ProblemConfig(0, 0, 2)
    g = Grid(2, 12)
    W = WFunction(0, 0, g, np.ones(g.size))
    with pytest.raises(CaseError):
        solve_main_degenerate(W, cfg, Identity())


def test_degenerate_k1_rejected():
    cfg = ProblemConfig(0, 0, 1)
    g = Grid(1, 12)
    with pytest.raises(CaseError):
        solve_main_degenerate(WFunction.zero(cfg, g), cfg)
