"""Recovery of the potential from the spectrum.

The pipeline is: rebuild ``Delta`` from the eigenvalues as an infinite
product whose unknown tail is replaced by unperturbed factors
(:class:`ReconstructedDelta`), read off the Fourier coefficients of ``W``
by sampling ``Delta`` where the leading term vanishes (:func:`extract_W`),
then solve the main equation for ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from .core import (
    asymptotic_rho,
    CaseError,
    ConstantFunction,
    FrozenK,
    Grid,
    NotRealizableError,
    Potential,
    ProblemConfig,
    Spectrum,
    spectrum_residuals,
    WFunction,
)
from .forward import check_degeneration_spectrum, sinc
from .operators import (
    degeneration_residual_W,
    first_panel_from_W,
    reflected,
    shifted,
    solve_main_degenerate,
    solve_main_nondegenerate,
)

PI = math.pi


def _closed_form_quotient(rho: np.ndarray, theta: np.ndarray, j: int, half: bool) -> np.ndarray:
    """``F(rho) / (1 - rho^2/theta_j^2)`` without the removable singularity,
    where ``F`` is ``sin(pi rho)/(pi rho)`` or ``cos(pi rho)``."""
    t = theta[j]
    sign = -1.0 if (j + 1) % 2 == 0 else 1.0  # (-1)**(j_1based + 1)
    s = sinc(PI * (rho - t))
    if half:
        return sign * PI * s * t * t / (t + rho)
    return sign * s * t * t / (rho * (t + rho))


@dataclass(frozen=True, eq=False)
class ReconstructedDelta:
    """Characteristic function rebuilt from ``lambda_1..lambda_N``.

    Eigenvalues beyond ``N`` are taken at their unperturbed positions, so
    the infinite tail of the product collapses to ``sin(pi rho)/(pi rho)``
    (integer seeds) or ``cos(pi rho)`` (half-integer seeds).
    """

    spectrum: Spectrum
    n_explicit: int
    sign: int = 1
    info: dict = field(default_factory=dict)

    @property
    def config(self) -> ProblemConfig:
        return self.spectrum.config

    def _unsigned(self, lam) -> np.ndarray:
        cfg = self.config
        lam = np.atleast_1d(np.asarray(lam, dtype=complex)).ravel()
        rho = np.sqrt(lam)
        rho = np.where(rho.real < 0, -rho, rho)
        N = self.n_explicit
        vals = self.spectrum.values[:N]
        half = cfg.alpha != cfg.beta
        both = cfg.alpha == 1 and cfg.beta == 1
        if both:
            # lambda_1 enters as a bare factor; lambda_n, n >= 2, pair with seeds n - 1
            lead = PI * (vals[0] - lam)
            vals = vals[1:]
        else:
            lead = np.full(lam.shape, PI if cfg.alpha == cfg.beta else 1.0, dtype=complex)
        theta = np.arange(1, len(vals) + 1) - (0.5 if half else 0.0)
        seeds = theta**2

        if half:
            nearest = np.floor(rho.real).astype(int)  # theta_j = j + 1/2 closest
        else:
            nearest = np.rint(rho.real).astype(int) - 1
        use = (nearest >= 0) & (nearest < len(vals))
        base = np.cos(PI * rho) if half else sinc(PI * rho)

        with np.errstate(all="ignore"):
            ratio = (vals[None, :] - lam[:, None]) / (seeds[None, :] - lam[:, None])
        out = np.empty(lam.shape, dtype=complex)
        for i in range(lam.size):
            r = ratio[i]
            if use[i]:
                j = nearest[i]
                r = r.copy()
                r[j] = (vals[j] - lam[i]) / seeds[j]
                f = _closed_form_quotient(rho[i : i + 1], theta, j, half)[0]
            else:
                f = base[i]
            out[i] = lead[i] * f * np.prod(r)
        return out

    def __call__(self, lam):
        shape = np.shape(lam)
        out = self.sign * self._unsigned(lam)
        return out.reshape(shape) if shape else complex(out[0])


def _leading_term(lam: complex, cfg: ProblemConfig) -> complex:
    rho = np.sqrt(complex(lam))
    if cfg.alpha != cfg.beta:
        return (-1) ** cfg.alpha * np.cos(PI * rho)
    if cfg.alpha == 0:
        return PI * complex(sinc(PI * rho))
    return rho * np.sin(PI * rho)


def reconstruct_delta(spec: Spectrum, n_explicit: int | None = None, probe: float = 40.0) -> ReconstructedDelta:
    """Rebuild ``Delta`` from the first ``n_explicit`` eigenvalues.

    The overall sign is fixed by matching the leading asymptotic term at
    ``lambda = -probe**2``.
    """
    cfg = spec.config
    N = len(spec) if n_explicit is None else int(n_explicit)
    if not 1 <= N <= len(spec):
        raise ValueError("n_explicit must lie in 1..len(spec)")
    kappa, plausible = spectrum_residuals(spec)
    vals = spec.values[:N]
    tail_seeds = asymptotic_rho(np.arange(N + 1, N + 2 * N + 50), cfg) ** 2
    scale = np.maximum(1.0, np.abs(vals))
    hits = np.abs(vals[:, None] - tail_seeds[None, :]) < 1e-12 * scale[:, None]
    if hits.any():
        n = int(np.argwhere(hits)[0][0]) + 1
        raise ValueError(
            f"eigenvalue with index {n} coincides with an unperturbed tail value"
        )
    delta = ReconstructedDelta(spec, N, 1)
    lam = -(probe**2)
    ratio = complex(delta(lam)) / _leading_term(lam, cfg)
    sign = 1 if ratio.real >= 0 else -1
    info = {"sign": sign, "probe_ratio": abs(ratio), "l2_plausible": plausible}
    return ReconstructedDelta(spec, N, sign, info)


def extract_W(delta, cfg: ProblemConfig, n_modes: int) -> WFunction:
    """Fourier coefficients of ``W`` from samples of ``Delta``.

    ``delta`` is any callable of ``lambda``.  For ``alpha == beta`` the samples
    sit at ``rho = n`` (``sin(pi rho) = 0``); otherwise at ``rho = n - 1/2``.
    """
    if cfg.alpha != cfg.beta:
        rho = np.arange(1, n_modes + 1) - 0.5
        vals = np.asarray(delta(rho**2), dtype=complex)
        coeffs = 2 / PI * rho * vals
        return WFunction(cfg.alpha, cfg.beta, coeffs=coeffs)
    n = np.arange(1, n_modes + 1)
    vals = np.asarray(delta(n.astype(float) ** 2), dtype=complex)
    coeffs = np.zeros(n_modes + 1, dtype=complex)
    if cfg.alpha == 0:
        coeffs[1:] = 2 / PI * n**2 * vals
    else:
        coeffs[1:] = 2 / PI * vals
        coeffs[0] = complex(delta(0.0)) / PI
    return WFunction(cfg.alpha, cfg.beta, coeffs=coeffs)


# ---------------------------------------------------------------------------
# panel reprojection of a truncated series


def _moment_setup(W: WFunction, k: int, n_c: int, degree: int, m: int):
    """Fourier moments of the panel Legendre basis, shape ``(n_c, k (degree + 1))``."""
    fine = Grid(k, max(m, n_c + degree + 32))
    t = fine.points
    s = 2 * np.tile(fine.ref_nodes, k) - 1
    panel = np.repeat(np.arange(k), fine.m)
    P = legendre.legvander(s, degree)
    design = np.zeros((k * fine.m, k * (degree + 1)))
    for p in range(k):
        rows = panel == p
        design[rows, p * (degree + 1) : (p + 1) * (degree + 1)] = P[rows]
    if W.cosine_basis:
        basis = np.cos(np.multiply.outer(np.arange(n_c), t))
        norm = np.full(n_c, 2 / PI)
        norm[0] = 1 / PI
    else:
        basis = np.sin(np.multiply.outer(np.arange(1, n_c + 1) - 0.5, t))
        norm = np.full(n_c, 2 / PI)
    return (basis * fine.weights) @ design * norm[:, None]


def _coeff_norm(c: np.ndarray, cosine: bool) -> float:
    w = np.full(len(c), PI / 2)
    if cosine and len(c):
        w[0] = PI
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2)))


def choose_degree(W: WFunction, k: int, holdout: float = 0.25, margin: float = 0.5) -> int | None:
    """Pick the panel degree that best predicts held-out high coefficients.

    The fit uses the leading ``1 - holdout`` share of ``W.coeffs``; each
    candidate degree is scored by the L2 misfit on the rest.  ``None``
    (keep the plain series) competes with the score ``|held-out coeffs|``
    and wins unless a degree beats it by the factor ``margin``.  Degrees
    with fewer than 1.5 fitted coefficients per unknown are not tried.
    """
    c = W.coeffs
    n_c = len(c)
    n_fit = max(1, int(round(n_c * (1 - holdout))))
    if n_fit >= n_c:
        return None
    best, best_err = None, margin * _coeff_norm(c[n_fit:], W.cosine_basis)
    top = min(30, (2 * n_fit) // (3 * k) - 1)
    if top < 0:
        return None
    M = _moment_setup(W, k, n_c, top, 0)
    for d in range(top + 1):
        cols = np.concatenate([np.arange(p * (top + 1), p * (top + 1) + d + 1) for p in range(k)])
        x, *_ = np.linalg.lstsq(M[:n_fit][:, cols], c[:n_fit], rcond=None)
        err = _coeff_norm(M[n_fit:][:, cols] @ x - c[n_fit:], W.cosine_basis)
        if err < best_err:
            best, best_err = d, err
    return best


def panel_reprojection(W: WFunction, grid: Grid, degree: int | None = None) -> WFunction:
    """Resample a truncated series as panel-wise polynomials.

    ``W`` is smooth on each panel ``(j a, (j+1) a)`` but generally jumps
    at the panel ends, so its truncated Fourier series converges slowly in
    L2.  The panel polynomials whose first Fourier coefficients best match
    ``W.coeffs`` (least squares) remove that Gibbs error while agreeing
    with the data.  Without ``degree`` it is chosen by :func:`choose_degree`,
    which may also decide to keep the plain series.
    """
    if W.coeffs is None:
        raise ValueError("panel reprojection needs coefficients")
    k = grid.k
    if degree is None:
        degree = choose_degree(W, k)
        if degree is None:
            return W.on(grid)
    c = W.coeffs
    M = _moment_setup(W, k, len(c), degree, grid.m)
    x, *_ = np.linalg.lstsq(M, c, rcond=None)
    s_dst = 2 * np.tile(grid.ref_nodes, k) - 1
    panel_dst = np.repeat(np.arange(k), grid.m)
    vals = np.einsum(
        "il,il->i",
        legendre.legvander(s_dst, degree),
        x.reshape(k, degree + 1)[panel_dst],
    )
    return WFunction(W.alpha, W.beta, grid, vals)


# ---------------------------------------------------------------------------
# algorithms


@dataclass
class InverseOptions:
    n_explicit: int | None = None
    n_modes: int | None = None
    grid: Grid | None = None
    reprojection: str = "panel"  # or "none"
    degree: int | None = None
    deg_tol: float = 1e-6
    w_tol: float = 1e-8


def _opts(opts, kwargs) -> InverseOptions:
    opts = opts or InverseOptions()
    for key, val in kwargs.items():
        if not hasattr(opts, key):
            raise TypeError(f"unknown option {key!r}")
        setattr(opts, key, val)
    return opts


def _recover_W(spec: Spectrum, cfg: ProblemConfig, opts: InverseOptions):
    if spec.config != cfg:
        raise ValueError("spectrum belongs to a different configuration")
    N = opts.n_explicit or min(len(spec), 60)
    n_modes = opts.n_modes or max(1, N - 10)
    delta = reconstruct_delta(spec, N)
    W = extract_W(delta, cfg, n_modes)
    grid = opts.grid or Grid.for_frequency(cfg.k, n_modes + 10)
    if opts.reprojection == "panel":
        W_grid = panel_reprojection(W, grid, opts.degree)
    elif opts.reprojection == "none":
        W_grid = W.on(grid)
    else:
        raise ValueError(f"unknown reprojection {opts.reprojection!r}")
    meta = {
        "n_explicit": N,
        "n_modes": n_modes,
        "sign": delta.sign,
        "reprojection": opts.reprojection,
        "grid_m": grid.m,
        "l2_plausible": delta.info["l2_plausible"],
    }
    return W, W_grid, grid, meta


def recover_nondegenerate(spec: Spectrum, cfg: ProblemConfig, opts: InverseOptions | None = None, **kwargs) -> Potential:
    """Recover ``q`` from the spectrum in a non-degenerate case."""
    opts = _opts(opts, kwargs)
    if cfg.degenerate:
        raise CaseError("degenerate configuration; use recover_degenerate with a restriction K")
    W, W_grid, grid, meta = _recover_W(spec, cfg, opts)
    q = solve_main_nondegenerate(W_grid, cfg)
    return Potential(q.grid, q.values, meta=meta)


def solve_panelwise(W: WFunction, cfg: ProblemConfig, grid: Grid | None = None) -> Potential:
    """Non-degenerate main equation solved panel by panel from ``(0, a)`` outwards."""
    if cfg.degenerate:
        raise CaseError("the panel-wise solve applies to non-degenerate cases only")
    if grid is None:
        grid = W.grid
    Wb = W.sample(grid).reshape(grid.k, grid.m)
    k, sgn = cfg.k, (-1) ** cfg.alpha
    q = np.empty((k, grid.m), dtype=complex)
    q[0] = first_panel_from_W(W.on(grid), cfg)
    if k > 1:
        # x in (a, 2a): q(x) = 2 (-1)^alpha W(pi + a - x) - q(2a - x)
        q[1] = 2 * sgn * reflected(Wb, k) - reflected(q, 1)
    for j in range(2, k):
        # x in (j a, (j+1) a): q(x) = (-1)^alpha (2 W(pi + a - x) + q(x - 2a))
        q[j] = sgn * (2 * reflected(Wb, k - j + 1) + shifted(q, j - 2))
    return Potential(grid, q.ravel())


def recover_degenerate(spec: Spectrum, cfg: ProblemConfig, K: FrozenK, opts: InverseOptions | None = None,
                  **kwargs) -> Potential:
    """Recover ``q`` in a degenerate case under ``q(a - t) = K(q(a + t))``."""
    opts = _opts(opts, kwargs)
    if not cfg.degenerate:
        raise CaseError("non-degenerate configuration; use recover_nondegenerate")
    if cfg.k < 2:
        raise CaseError("k = 1 carries no information on q")
    report = check_degeneration_spectrum(spec)
    if not report.passes(opts.deg_tol):
        worst = int(report.indices[np.argmax(report.deviation)])
        raise NotRealizableError(
            f"spectrum not realizable in degenerate case: eigenvalue {worst} deviates "
            f"by {report.max_deviation:.3g} from its forced value"
        )
    W, W_grid, grid, meta = _recover_W(spec, cfg, opts)
    res = degeneration_residual_W(W.on(grid), cfg)
    if res > opts.w_tol * max(1.0, W.l2_norm()):
        raise NotRealizableError(f"recovered W violates the degeneration identity ({res:.3g})")
    # the identity was checked on the series; the reprojection need not satisfy it exactly
    q = solve_main_degenerate(W_grid, cfg, K, tol=np.inf)
    meta.update(degeneration_max_deviation=report.max_deviation, w_residual=res)
    return Potential(q.grid, q.values, meta=meta)


def isospectral_family(spec: Spectrum, cfg: ProblemConfig, p_list, opts: InverseOptions | None = None,
                       **kwargs) -> list[Potential]:
    """One potential per ``p`` with ``q(x) = p(a - x)`` on ``(0, a)``, all sharing ``spec``."""
    p_list = list(p_list)
    if not p_list:
        return []
    opts = _opts(opts, kwargs)
    return [recover_degenerate(spec, cfg, ConstantFunction(p), opts) for p in p_list]


__all__ = [
    "ReconstructedDelta",
    "reconstruct_delta",
    "extract_W",
    "choose_degree",
    "panel_reprojection",
    "InverseOptions",
    "recover_nondegenerate",
    "solve_panelwise",
    "recover_degenerate",
    "isospectral_family",
]
