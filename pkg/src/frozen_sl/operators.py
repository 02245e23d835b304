"""Shift/involution operators and the main equation linking ``q`` and ``W``.

Functions on ``(0, pi)`` are handled as ``(k, m)`` panel arrays; a function
on ``(0, a)`` is one row.  With panel ``j`` covering ``(j a, (j+1) a)``:

* ``f(j a + t)`` for ``t`` in ``(0, a)`` is row ``j``;
* ``f(j a - t)`` is row ``j - 1`` reversed.

Both maps are exact on any grid with symmetric panel nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    CaseError,
    FrozenK,
    Grid,
    Identity,
    Potential,
    ProblemConfig,
    WFunction,
)


def shifted(blocks: np.ndarray, j: int) -> np.ndarray:
    """``f(j a + t)`` on ``(0, a)``."""
    return blocks[j]


def reflected(blocks: np.ndarray, j: int) -> np.ndarray:
    """``f(j a - t)`` on ``(0, a)``."""
    return blocks[j - 1][::-1]


def _blocks_of(f, k: int) -> np.ndarray:
    if isinstance(f, (Potential, WFunction)):
        blocks = f.blocks
    else:
        blocks = np.asarray(f)
        if blocks.ndim == 1:
            if blocks.size % k:
                raise ValueError("sample count is not a multiple of k")
            blocks = blocks.reshape(k, -1)
    if blocks.shape[0] != k:
        raise ValueError(f"expected {k} panels, got {blocks.shape[0]}")
    return blocks


def apply_Rm(f, m: int, cfg: ProblemConfig) -> np.ndarray:
    """``R_m f``: ``f(t + (k-m) a)`` for odd ``m``, ``f((k-m+1) a - t)`` for even ``m``."""
    k = cfg.k
    if not 1 <= m <= k:
        raise ValueError("m must lie in 1..k")
    blocks = _blocks_of(f, k)
    return shifted(blocks, k - m) if m % 2 else reflected(blocks, k - m + 1)


def apply_Qm(f, m: int, cfg: ProblemConfig) -> np.ndarray:
    """``Q_m f``: ``f(t + (m-1) a)`` for odd ``m``, ``f(m a - t)`` for even ``m``."""
    k = cfg.k
    if not 1 <= m <= k:
        raise ValueError("m must lie in 1..k")
    blocks = _blocks_of(f, k)
    return shifted(blocks, m - 1) if m % 2 else reflected(blocks, m)


def apply_R(f, cfg: ProblemConfig) -> np.ndarray:
    """Stacked vector ``(R_1 f, ..., R_k f)`` as a ``(k, m)`` array."""
    return np.stack([apply_Rm(f, m, cfg) for m in range(1, cfg.k + 1)])


def apply_Q(f, cfg: ProblemConfig) -> np.ndarray:
    return np.stack([apply_Qm(f, m, cfg) for m in range(1, cfg.k + 1)])


def invert_R(v, cfg: ProblemConfig) -> np.ndarray:
    """Panel array of the ``f`` with ``R f = v``."""
    v = np.asarray(v)
    k = cfg.k
    if v.ndim != 2 or v.shape[0] != k:
        raise ValueError(f"stacked vector must have {k} blocks")
    out = np.empty_like(v)
    for m in range(1, k + 1):
        out[k - m] = v[m - 1] if m % 2 else v[m - 1][::-1]
    return out


def invert_Q(v, cfg: ProblemConfig) -> np.ndarray:
    v = np.asarray(v)
    k = cfg.k
    if v.ndim != 2 or v.shape[0] != k:
        raise ValueError(f"stacked vector must have {k} blocks")
    out = np.empty_like(v)
    for m in range(1, k + 1):
        out[m - 1] = v[m - 1] if m % 2 else v[m - 1][::-1]
    return out


# ---------------------------------------------------------------------------
# the matrix A


@dataclass(frozen=True)
class AMatrix:
    entries: np.ndarray
    b: int
    c: int
    k: int

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def build_A(cfg: ProblemConfig) -> AMatrix:
    k, b, c = cfg.k, cfg.b, cfg.c
    if k == 1:
        val = 2 * (-1) ** (cfg.alpha * (cfg.beta + 1)) * (1 if cfg.beta == 1 else 0)
        return AMatrix(np.array([[val]], dtype=int), b, c, 1)
    A = np.zeros((k, k), dtype=int)
    A[0, 0] = 1
    A[k - 1, k - 1] = c
    idx = np.arange(k - 1)
    A[idx, idx + 1] = b
    A[idx + 1, idx] = c
    return AMatrix(A, b, c, k)


def det_A_closed(cfg: ProblemConfig) -> int:
    """Closed-form determinant of ``A``."""
    k, b, c = cfg.k, cfg.b, cfg.c
    if k == 1:
        return int(build_A(cfg).entries[0, 0])
    if k % 2:
        return (-b * c) ** ((k - 1) // 2) * (1 + c)
    return (-b) ** (k // 2 - 1) * c ** (k // 2) * (1 - b)


def det_exact(mat) -> int:
    """Determinant by fraction-exact Gaussian elimination."""
    rows = [[Fraction(int(x)) for x in row] for row in np.asarray(mat)]
    n = len(rows)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        det *= rows[col][col]
        for r in range(col + 1, n):
            f = rows[r][col] / rows[col][col]
            if f:
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return int(det)


# ---------------------------------------------------------------------------
# q -> W


def w_from_q_matrix(q: Potential, cfg: ProblemConfig) -> WFunction:
    """``W = ((-1)^(alpha beta) / 2) Q^{-1} A R q`` on the grid of ``q``."""
    _check_grid(q.grid, cfg)
    A = build_A(cfg).entries
    Y = A @ apply_R(q, cfg)
    blocks = cfg.sign / 2 * invert_Q(Y, cfg)
    return WFunction(cfg.alpha, cfg.beta, q.grid, blocks.ravel())


def w_from_q_piecewise(q: Potential, cfg: ProblemConfig) -> WFunction:
    """``W`` from the three-band explicit formula."""
    _check_grid(q.grid, cfg)
    k, b, c = cfg.k, cfg.b, cfg.c
    Q = q.blocks
    out = np.empty_like(Q)
    if k == 1:
        out[0] = build_A(cfg).entries[0, 0] * Q[0]
    else:
        # (0, a): q((k-1)a + t) + b q((k-1)a - t)
        out[0] = shifted(Q, k - 1) + b * reflected(Q, k - 1)
        # (a, (k-1)a): c q((k+1)a - t) + b q((k-1)a - t); panel p holds t = p a + s
        for p in range(1, k - 1):
            out[p] = c * reflected(Q, k + 1 - p) + b * reflected(Q, k - 1 - p)
        # ((k-1)a, pi): c (q((k+1)a - t) + q(t - (k-1)a))
        out[k - 1] = c * (reflected(Q, 2) + shifted(Q, 0))
    return WFunction(cfg.alpha, cfg.beta, q.grid, (cfg.sign / 2 * out).ravel())


w_from_q = w_from_q_matrix


def _check_grid(grid: Grid, cfg: ProblemConfig):
    if grid.k != cfg.k:
        raise ValueError(f"grid has {grid.k} panels, config has k={cfg.k}")


def _w_blocks(W: WFunction, cfg: ProblemConfig, grid: Grid | None) -> tuple[np.ndarray, Grid]:
    if (W.alpha, W.beta) != (cfg.alpha, cfg.beta):
        raise ValueError("W is tagged with a different (alpha, beta)")
    if grid is None:
        if W.grid is None:
            raise ValueError("W has no grid; pass one explicitly")
        grid = W.grid
    _check_grid(grid, cfg)
    return W.sample(grid).reshape(grid.k, grid.m), grid


# ---------------------------------------------------------------------------
# W -> q


def solve_main_nondegenerate(W: WFunction, cfg: ProblemConfig, grid: Grid | None = None) -> Potential:
    """Solve the main equation for ``q`` when ``A`` is invertible."""
    if cfg.degenerate:
        raise CaseError("degenerate configuration; use solve_main_degenerate")
    Wb, grid = _w_blocks(W, cfg, grid)
    Y = 2 * cfg.sign * apply_Q(Wb, cfg)
    X = np.linalg.solve(build_A(cfg).entries.astype(float), Y)
    return Potential(grid, invert_R(X, cfg).ravel())


def degeneration_residual_W(W: WFunction, cfg: ProblemConfig, grid: Grid | None = None) -> float:
    """L2 norm on ``(0, a)`` of the structural identity ``W`` obeys in a degenerate case."""
    if not cfg.degenerate:
        raise CaseError("degeneration identities exist only in degenerate cases")
    Wb, grid = _w_blocks(W, cfg, grid)
    k = cfg.k
    res = np.zeros(grid.m, dtype=complex)
    if cfg.alpha == 0 and cfg.beta == 0:
        for j in range(0, (k - 1) // 2 + 1):
            res += shifted(Wb, 2 * j)
        for j in range(1, k // 2 + 1):
            res += reflected(Wb, 2 * j)
    elif cfg.alpha == 1 and cfg.beta == 0:
        for j in range(0, (k - 1) // 2 + 1):
            res += (-1) ** j * shifted(Wb, 2 * j)
        for j in range(1, (k - 1) // 2 + 1):
            res -= (-1) ** j * reflected(Wb, 2 * j)
    else:
        for j in range(0, k // 2):
            res += (-1) ** j * shifted(Wb, 2 * j)
        for j in range(1, k // 2 + 1):
            res += (-1) ** j * reflected(Wb, 2 * j)
    return grid.block_norm(res)


def first_panel_from_W(W: WFunction, cfg: ProblemConfig, grid: Grid | None = None) -> np.ndarray:
    """``q`` on ``(0, a)`` written directly in terms of ``W`` (non-degenerate cases)."""
    if cfg.degenerate:
        raise CaseError("direct formula exists only in non-degenerate cases")
    Wb, grid = _w_blocks(W, cfg, grid)
    k = cfg.k
    alpha, beta = cfg.alpha, cfg.beta
    if alpha == 0 and beta == 1:
        if k % 2:
            q = shifted(Wb, 0).copy()
            for j in range(1, (k - 1) // 2 + 1):
                q += shifted(Wb, 2 * j) - reflected(Wb, 2 * j)
        else:
            q = np.zeros(grid.m, dtype=complex)
            for j in range(1, k // 2 + 1):
                q += shifted(Wb, 2 * j - 1) - reflected(Wb, 2 * j - 1)
    elif alpha == 1 and beta == 0:
        q = np.zeros(grid.m, dtype=complex)
        for j in range(1, k // 2 + 1):
            s = k + 1 - 2 * j
            q += (-1) ** j * (reflected(Wb, s) + shifted(Wb, s))
    else:
        q = shifted(Wb, 0).copy()
        for j in range(1, (k - 1) // 2 + 1):
            q += (-1) ** j * (shifted(Wb, 2 * j) + reflected(Wb, 2 * j))
        q *= (-1) ** ((k + 1) // 2)
    return q


def solve_main_degenerate(
    W: WFunction,
    cfg: ProblemConfig,
    K: FrozenK | None = None,
    grid: Grid | None = None,
    *,
    tol: float = 1e-8,
    free_block: int | None = None,
    block_values=None,
) -> Potential:
    """Solve the rank-deficient main equation under ``q(a - t) = K(q(a + t))``.

    The last row fixes ``q(a+t) + q(a-t)``; ``(I + K)^{-1}`` splits it into
    the panels on ``(0, a)`` and ``(a, 2a)``, and the remaining rows are
    solved backwards.  With ``free_block=j`` (1-based) the samples of ``q``
    on ``((j-1) a, j a)`` are prescribed by ``block_values`` instead and
    ``K`` is ignored.
    """
    if not cfg.degenerate:
        raise CaseError("non-degenerate configuration; use solve_main_nondegenerate")
    if cfg.k < 2:
        raise CaseError("k = 1 carries no information on q")
    Wb, grid = _w_blocks(W, cfg, grid)
    scale = max(1.0, float(np.sqrt(np.dot(grid.weights, np.abs(Wb.ravel()) ** 2))))
    res = degeneration_residual_W(W, cfg, grid)
    if res > tol * scale:
        raise CaseError(
            f"inconsistent spectrum/W for degenerate case (residual {res:.3e})"
        )
    k, b, c = cfg.k, cfg.b, cfg.c
    Y = 2 * cfg.sign * apply_Q(Wb, cfg)
    if free_block is not None:
        return _solve_with_free_block(Y, cfg, grid, free_block, block_values)
    K = K if K is not None else Identity()
    X = np.empty_like(Y)
    # row k: c (x_{k-1} + x_k) = y_k, i.e. q(a + t) + q(a - t) = s(t)
    total = c * Y[k - 1]
    if k % 2:
        total = total[::-1]
    u = K.solve_identity_plus(total, grid)  # q(a + t)
    v = total - u  # q(a - t)
    if k % 2:
        X[k - 2], X[k - 1] = u[::-1], v[::-1]
    else:
        X[k - 2], X[k - 1] = u, v
    for j in range(k - 2, 0, -1):
        # row j+1: c x_j + b x_{j+2} = y_{j+1}
        X[j - 1] = c * (Y[j] - b * X[j + 1])
    return Potential(grid, invert_R(X, cfg).ravel())


def _solve_with_free_block(Y, cfg, grid, free_block, block_values):
    k = cfg.k
    if not 1 <= free_block <= k:
        raise ValueError("free_block must lie in 1..k")
    if block_values is None:
        raise ValueError("block_values is required with free_block")
    fixed = np.asarray(block_values, dtype=complex)
    if fixed.shape != (grid.m,):
        raise ValueError("block_values must hold one panel of samples")
    # panel free_block-1 is R_m q for m = k - free_block + 1
    m = k - free_block + 1
    x_fixed = fixed if m % 2 else fixed[::-1]
    A = build_A(cfg).entries.astype(float)
    rhs = Y - np.outer(A[:, m - 1], x_fixed)
    cols = [i for i in range(k) if i != m - 1]
    sol, *_ = np.linalg.lstsq(A[:, cols], rhs, rcond=None)
    X = np.empty_like(Y)
    X[m - 1] = x_fixed
    X[cols] = sol
    return Potential(grid, invert_R(X, cfg).ravel())
