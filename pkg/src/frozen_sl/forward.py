"""Characteristic function and eigenvalue computation.

``Delta(lambda)`` is evaluated in two independent ways: through the kernel
``W`` (:func:`eval_delta_W`) and directly from the fundamental solutions
built from ``q`` (:func:`eval_delta_direct`).  Eigenvalues are located by
Newton's method in ``rho = sqrt(lambda)``, seeded at the unperturbed
values, with argument-principle counts as a fallback and a check.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from .core import (
    CaseError,
    Grid,
    Potential,
    ProblemConfig,
    RootFindingError,
    Spectrum,
    WFunction,
    asymptotic_rho,
)
from .operators import w_from_q_matrix

PI = math.pi


def sinc(z):
    """Entire ``sin(z)/z`` for complex arrays."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    zz = np.where(small, 1.0, z)
    z2 = z * z
    series = 1 - z2 / 6 * (1 - z2 / 20 * (1 - z2 / 42))
    return np.where(small, series, np.sin(zz) / zz)


def _rho(lam) -> np.ndarray:
    return np.sqrt(np.asarray(lam, dtype=complex))


# ---------------------------------------------------------------------------
# Delta through W


def _leading(rho: np.ndarray, cfg: ProblemConfig) -> np.ndarray:
    if cfg.alpha != cfg.beta:
        return (-1) ** cfg.alpha * np.cos(rho * PI)
    if cfg.alpha == 0:
        return PI * sinc(rho * PI)
    return rho * np.sin(rho * PI)


def _grid_kernel(rho: np.ndarray, t: np.ndarray, cfg: ProblemConfig) -> np.ndarray:
    rt = np.multiply.outer(rho, t)
    if cfg.alpha != cfg.beta:
        return t * sinc(rt)  # sin(rho t) / rho
    if cfg.alpha == 0:
        # (cos(rho t) - 1) / rho^2; the constant drops out since W has zero mean
        return -(t**2) / 2 * sinc(rt / 2) ** 2
    return np.cos(rt)


def _series_kernel(rho: np.ndarray, n_coeffs: int, cfg: ProblemConfig) -> np.ndarray:
    """Exact integrals of each basis function against the kernel."""
    r = rho[:, None]
    with np.errstate(all="ignore"):
        if cfg.alpha != cfg.beta:
            n = np.arange(1, n_coeffs + 1)
            m = n - 0.5
            near0 = (-1.0) ** n * np.cos(r * PI) / (r * r - m * m)
            general = PI / 2 * (sinc((r - m) * PI) - sinc((r + m) * PI)) / r
            return np.where(np.abs(r) <= 0.25, near0, general)
        n = np.arange(n_coeffs)
        cos_int = PI / 2 * (sinc((r + n) * PI) + sinc((r - n) * PI))
        if cfg.alpha == 1:
            return cos_int
        near0 = (-1.0) ** n * PI * sinc(r * PI) / (r * r - n * n)
        general = cos_int / (r * r)
        out = np.where(np.abs(r) <= 0.5, near0, general)
        # n = 0: (sin(rho pi)/rho - pi) / rho^2
        z = r[:, 0] * PI
        z2 = z * z
        series = PI**3 * (-1 / 6 + z2 / 120 - z2 * z2 / 5040 + z2**3 / 362880)
        zz = np.where(np.abs(z) < 0.1, 1.0, z)
        direct = PI * (sinc(zz) - 1) / (r[:, 0] ** 2)
        out[:, 0] = np.where(np.abs(z) < 0.1, series, direct)
        return out


@dataclass(frozen=True, eq=False)
class CharFn:
    """``Delta_{alpha,beta}`` bound to a kernel ``W``.

    Coefficient-backed kernels are integrated in closed form per mode;
    otherwise the grid quadrature of ``W.grid`` is used.
    """

    cfg: ProblemConfig
    W: WFunction
    method: str = "auto"

    def __post_init__(self):
        if (self.W.alpha, self.W.beta) != (self.cfg.alpha, self.cfg.beta):
            raise ValueError("W is tagged with a different (alpha, beta)")
        method = self.method
        if method == "auto":
            method = "series" if self.W.coeffs is not None else "grid"
        if method == "grid" and self.W.values is None:
            raise ValueError("grid evaluation needs sampled W")
        if method == "series" and self.W.coeffs is None:
            raise ValueError("series evaluation needs coefficients")
        object.__setattr__(self, "method", method)

    def at_rho(self, rho) -> np.ndarray:
        rho = np.atleast_1d(np.asarray(rho, dtype=complex))
        shape = rho.shape
        rho = rho.ravel()
        out = _leading(rho, self.cfg)
        if self.method == "series":
            ker = _series_kernel(rho, len(self.W.coeffs), self.cfg)
            out = out + ker @ self.W.coeffs
        else:
            grid = self.W.grid
            ker = _grid_kernel(rho, grid.points, self.cfg)
            out = out + ker @ (grid.weights * self.W.values)
        return out.reshape(shape)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = self.at_rho(_rho(lam))
        return out if lam.ndim else complex(out.ravel()[0])


def eval_delta_W(lam, W: WFunction, cfg: ProblemConfig):
    return CharFn(cfg, W)(lam)


# ---------------------------------------------------------------------------
# Delta from the fundamental solutions


@functools.lru_cache(maxsize=32)
def _gauss(n: int):
    return legendre.leggauss(n)


def _nodes(lo: float, hi: float, rho: complex) -> tuple[np.ndarray, np.ndarray]:
    n = max(64, int(1.2 * abs(rho) * (hi - lo)) + 48)
    x, w = _gauss(n)
    half = (hi - lo) / 2
    return lo + half * (x + 1), half * w


def _integrals(q, rho: complex, cfg: ProblemConfig):
    """Moments of ``q`` against the four kernels entering C and C'."""
    a = cfg.a
    if isinstance(q, Potential) and q.coeffs is None:
        g = q.grid
        t0, w0, q0 = g.block_nodes, g.block_weights, q.blocks[0]
        t1 = g.points[g.m :]
        w1 = g.weights[g.m :]
        q1 = q.values[g.m :]
    else:
        t0, w0 = _nodes(0.0, a, rho)
        q0 = np.asarray(q(t0), dtype=complex)
        if cfg.k > 1:
            t1, w1 = _nodes(a, PI, rho)
            q1 = np.asarray(q(t1), dtype=complex)
        else:
            t1 = w1 = q1 = np.zeros(0)
    wq0, wq1 = w0 * q0, w1 * q1
    s0 = np.dot(wq0, t0 * sinc(rho * t0))  # int_0^a sin(rho t)/rho q
    c0 = np.dot(wq0, np.cos(rho * t0))
    u = PI - t1
    s1 = np.dot(wq1, u * sinc(rho * u))  # int_a^pi sin(rho (pi - t))/rho q
    c1 = np.dot(wq1, np.cos(rho * u))
    return s0, c0, s1, c1


def eval_delta_direct(lam, q, cfg: ProblemConfig):
    """``Delta`` as the 2x2 determinant of the boundary values of C and S.

    ``q`` is a :class:`Potential` (grid quadrature, or Gauss quadrature of
    its cosine series) or any callable on ``(0, pi)``.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    out = np.empty(lam_arr.shape, dtype=complex)
    a = cfg.a
    b_len = PI - a
    for idx, lm in np.ndenumerate(lam_arr):
        rho = complex(np.sqrt(lm))
        s0, c0, s1, c1 = _integrals(q, rho, cfg)
        sa = a * complex(sinc(rho * a))  # sin(rho a)/rho
        sb = b_len * complex(sinc(rho * b_len))
        ca, cb = np.cos(rho * a), np.cos(rho * b_len)
        C0, dC0 = ca + s0, lm * sa - c0
        S0, dS0 = -sa, ca
        Cpi, dCpi = cb + s1, -lm * sb + c1
        Spi, dSpi = sb, cb
        left = (dC0, dS0) if cfg.alpha else (C0, S0)
        right = (dCpi, dSpi) if cfg.beta else (Cpi, Spi)
        out[idx] = left[0] * right[1] - left[1] * right[0]
    return out if np.ndim(lam) else complex(out[0])


# ---------------------------------------------------------------------------
# zero counting


def winding_number(f, path: np.ndarray, max_points: int = 1 << 15) -> int:
    """Number of zeros of ``f`` enclosed by the closed polygon ``path``.

    Edges are refined until consecutive phase increments stay below pi/4.
    """
    path = np.asarray(path, dtype=complex)
    z = np.concatenate([path, path[:1]])
    while True:
        vals = f(z)
        if np.any(vals == 0) or not np.all(np.isfinite(vals)):
            raise RootFindingError("function vanishes or overflows on the contour")
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) > PI / 4
        if not bad.any():
            return int(round(np.sum(dphi) / (2 * PI)))
        if z.size > max_points:
            raise RootFindingError("contour refinement limit reached")
        mids = (z[:-1] + z[1:]) / 2
        keep = np.flatnonzero(bad)
        z = np.insert(z, keep + 1, mids[keep])


def rectangle(lo: complex, hi: complex, n: int = 16) -> np.ndarray:
    """Counter-clockwise rectangle with corners ``lo`` and ``hi``."""
    x0, y0, x1, y1 = lo.real, lo.imag, hi.real, hi.imag
    s = np.linspace(0, 1, n, endpoint=False)
    return np.concatenate([
        x0 + (x1 - x0) * s + 1j * y0,
        x1 + 1j * (y0 + (y1 - y0) * s),
        x1 - (x1 - x0) * s + 1j * y1,
        x0 + 1j * (y1 - (y1 - y0) * s),
    ])


def count_zeros(f, lo: complex, hi: complex) -> int:
    """Zeros of ``f`` in the rectangle; sampling starts dense enough that the
    phase of a function oscillating like ``exp(i pi sqrt(lambda))`` cannot
    alias past the refinement test."""
    span = max(abs(lo), abs(hi), abs(complex(lo.real, hi.imag)), abs(complex(hi.real, lo.imag)))
    n = max(16, int(math.ceil(8 * math.sqrt(span))))
    return winding_number(f, rectangle(lo, hi, n))


# ---------------------------------------------------------------------------
# eigenvalues


def _newton(f, z0: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Newton with a central-difference derivative.

    Linear convergence (a multiple zero) is detected from the ratio of
    successive steps and the step is scaled by the estimated multiplicity.
    An iterate whose steps stop shrinking below ``1e-6`` relative size is
    accepted: it sits at the noise floor of a multiple zero.
    """
    z = np.array(z0, dtype=complex)
    done = np.zeros(z.shape, dtype=bool)
    prev = np.full(z.shape, np.inf)
    for _ in range(max_iter):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        za = z[act]
        scale = np.maximum(1.0, np.abs(za))
        h = 1e-5 * scale
        fz = f(za)
        d = (f(za + h) - f(za - h)) / (2 * h)
        with np.errstate(all="ignore"):
            step = np.where(fz == 0, 0, fz / d)
        bad = ~np.isfinite(step)
        step[bad] = 0
        size = np.abs(step)
        with np.errstate(all="ignore"):
            ratio = size / prev[act]
        mult = np.where((ratio > 0.3) & (ratio < 0.95), np.rint(1 / (1 - ratio)), 1.0)
        z[act] = za - mult * step
        conv = (size <= tol * scale) & ~bad
        stalled = (ratio >= 0.95) & (size <= 1e-6 * scale) & ~bad
        done[act[conv | stalled]] = True
        prev[act] = np.where(mult > 1, np.inf, size)
    return z, done


def _count_minus_known(f, lo, hi, known) -> int:
    inside = sum(1 for r in known if lo.real < r.real < hi.real and lo.imag < r.imag < hi.imag)
    return count_zeros(f, lo, hi) - inside


def _find_missing(f, lo: complex, hi: complex, known: list, tol: float, depth: int = 0):
    """Locate a zero of ``f`` in the rectangle that is not listed in ``known``."""
    if _count_minus_known(f, lo, hi, known) < 1:
        return None
    size = max(hi.real - lo.real, hi.imag - lo.imag)
    if size < 1e-4 * max(1.0, abs(lo)) or depth > 80:
        near = [r for r in known if abs(r - (lo + hi) / 2) < 10 * size]

        def g(z):
            out = f(z)
            for r in near:
                out = out / (z - r)
            return out

        z, ok = _newton(g, np.array([(lo + hi) / 2]), tol, 80)
        return complex(z[0]) if ok[0] else None
    if hi.real - lo.real >= hi.imag - lo.imag:
        mid = (lo.real + hi.real) / 2 + 1.234567e-3 * size
        halves = [(lo, complex(mid, hi.imag)), (complex(mid, lo.imag), hi)]
    else:
        mid = (lo.imag + hi.imag) / 2 + 1.234567e-3 * size
        halves = [(lo, complex(hi.real, mid)), (complex(lo.real, mid), hi)]
    for h_lo, h_hi in halves:
        root = _find_missing(f, h_lo, h_hi, known, tol, depth + 1)
        if root is not None:
            return root
    return None


@dataclass
class SpectrumOptions:
    tol_root: float = 1e-13
    max_iter: int = 60
    tie_tol: float = 1e-6
    extra_seeds: int = 2
    verify: bool = True
    grid: Grid | None = None


def _charfn_for(source, cfg: ProblemConfig, n_max: int, grid: Grid | None) -> CharFn:
    if isinstance(source, CharFn):
        return source
    if isinstance(source, WFunction):
        if source.coeffs is not None:
            return CharFn(cfg, source, "series")
        return CharFn(cfg, source, "grid")
    if isinstance(source, Potential):
        q = source
        if grid is None:
            need = Grid.for_frequency(cfg.k, n_max + 2)
            if q.coeffs is not None and q.grid.m < need.m:
                q = q.resample(need)
        else:
            q = q.resample(grid)
        return CharFn(cfg, w_from_q_matrix(q, cfg), "grid")
    raise TypeError(f"cannot build a characteristic function from {type(source)!r}")


def _newton_from_seeds(delta: CharFn, seeds: np.ndarray, opts) -> tuple[np.ndarray, np.ndarray]:
    roots = np.empty(seeds.size, dtype=complex)
    ok = np.empty(seeds.size, dtype=bool)
    on_rho = seeds >= 1
    roots[on_rho], ok[on_rho] = _newton(delta.at_rho, seeds[on_rho], opts.tol_root, opts.max_iter)
    if (~on_rho).any():
        lam, ok[~on_rho] = _newton(delta, seeds[~on_rho] ** 2, opts.tol_root, opts.max_iter)
        roots[~on_rho] = np.sqrt(lam)
    roots = np.where(roots.real < 0, -roots, roots)
    return roots, ok & np.isfinite(roots)


def _polish_double(delta: CharFn, rho: complex, opts) -> complex:
    """A double zero of ``Delta`` is a simple zero of its derivative."""
    lam0 = complex(rho) ** 2
    h = 1e-3 * max(1.0, abs(lam0))

    def deriv(lam):
        # fourth-order central difference
        return (8 * (delta(lam + h) - delta(lam - h)) - delta(lam + 2 * h) + delta(lam - 2 * h)) / (12 * h)

    lam, ok = _newton(deriv, np.array([lam0]), opts.tol_root, opts.max_iter)
    if not ok[0] or abs(lam[0] - lam0) > 1e-4 * max(1.0, abs(lam0)):
        return rho
    root = complex(np.sqrt(lam[0]))
    return root if root.real >= 0 else -root


def compute_spectrum(source, cfg: ProblemConfig, n_max: int, opts: SpectrumOptions | None = None,
                     **kwargs) -> Spectrum:
    """First ``n_max`` eigenvalues of the problem defined by ``source``.

    ``source`` is a :class:`Potential`, a :class:`WFunction` or a
    :class:`CharFn`; keyword arguments override :class:`SpectrumOptions`.
    Eigenvalues are indexed by increasing real part of ``rho`` and listed
    with multiplicity.  Unless ``verify=False``, the number of zeros with
    ``|rho| < n_max + 1/2 - (alpha+beta)/2`` is counted by the argument
    principle and any eigenvalue Newton missed is located by bisecting
    rectangles in the lambda plane.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    opts = opts or SpectrumOptions()
    for key, val in kwargs.items():
        if not hasattr(opts, key):
            raise TypeError(f"unknown option {key!r}")
        setattr(opts, key, val)
    delta = _charfn_for(source, cfg, n_max, opts.grid)
    seeds = asymptotic_rho(np.arange(1, n_max + opts.extra_seeds + 1), cfg).astype(float)
    roots, ok = _newton_from_seeds(delta, seeds, opts)
    notes = []

    # merge Newton runs that reached the same root
    found: list[complex] = []
    multiplicity = {}
    for r in sorted(roots[ok], key=lambda z: (z.real, z.imag)):
        if found and abs(r - found[-1]) < opts.tie_tol:
            lam0 = found[-1] ** 2
            rad = max(1e-5, 4 * opts.tie_tol * max(1.0, abs(found[-1])))
            if found.count(found[-1]) == 1 and count_zeros(
                delta, lam0 - rad * (1 + 1j), lam0 + rad * (1 + 1j)
            ) >= 2:
                found[-1] = _polish_double(delta, found[-1], opts)
                found.append(found[-1])
                multiplicity[complex(found[-1] ** 2)] = 2
                notes.append(f"double eigenvalue near {complex(lam0):.6g} recorded twice")
            continue
        found.append(complex(r))

    info = {"method": delta.method, "notes": notes}
    radius = n_max + 0.5 - (cfg.alpha + cfg.beta) / 2
    if opts.verify and radius <= 150:
        theta = np.linspace(0, 2 * PI, 64 * n_max, endpoint=False)
        counted = winding_number(delta, radius**2 * np.exp(1j * theta))
        lo, hi = complex(-(radius**2), -(radius**2)), complex(radius**2, radius**2)
        for _ in range(counted + 2):
            inside = sum(1 for r in found if abs(r) < radius)
            if inside >= counted:
                break
            lam = _find_missing(delta, lo, hi, [r**2 for r in found], opts.tol_root)
            if lam is None:
                raise RootFindingError(
                    f"could not locate eigenvalue with index n={inside + 1}"
                )
            root = complex(np.sqrt(lam))
            found.append(root if root.real >= 0 else -root)
            notes.append(f"eigenvalue {lam:.6g} located by contour subdivision")
        info["verification"] = {"expected": n_max, "counted": counted, "ok": counted == n_max}
        if counted != n_max:
            notes.append(f"{counted} zeros inside |rho| < {radius}, expected {n_max}")
    elif opts.verify:
        info["verification"] = {"checked": False, "reason": "radius too large"}

    found.sort(key=lambda z: (z.real, z.imag))
    if len(found) < n_max:
        raise RootFindingError(f"could not locate eigenvalue with index n={len(found) + 1}")
    lam = np.array(found[:n_max]) ** 2
    info["multiplicity"] = {str(k): v for k, v in multiplicity.items()}
    info["max_abs_delta"] = float(np.max(np.abs(delta(lam))))
    return Spectrum(lam, cfg, info)


def verify_count(delta: CharFn, cfg: ProblemConfig, n_max: int) -> dict:
    """Compare the number of zeros inside ``|rho| < n_max + 1/2 - (alpha+beta)/2``
    with ``n_max``, by the argument principle on a circle in the lambda plane."""
    radius = n_max + 0.5 - (cfg.alpha + cfg.beta) / 2
    if radius > 150:
        return {"checked": False, "reason": "radius too large for double precision"}
    theta = np.linspace(0, 2 * PI, 64 * n_max, endpoint=False)
    count = winding_number(delta, radius**2 * np.exp(1j * theta))
    return {"checked": True, "expected": n_max, "counted": count, "ok": count == n_max}


# ---------------------------------------------------------------------------
# degeneration


@dataclass
class DegenerationReport:
    indices: np.ndarray
    forced: np.ndarray
    deviation: np.ndarray
    max_deviation: float = field(init=False)

    def __post_init__(self):
        self.max_deviation = float(self.deviation.max()) if self.deviation.size else 0.0

    def passes(self, tol: float) -> bool:
        return self.max_deviation <= tol


def designated_indices(cfg: ProblemConfig, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """1-based indices of the forced eigenvalues up to ``n_max`` and their values."""
    k = cfg.k
    if not cfg.degenerate:
        raise CaseError("no eigenvalues are forced in non-degenerate cases")
    n = np.arange(1, n_max + 1)
    if cfg.alpha == 0 and cfg.beta == 0:
        idx, val = k * n, (k * n) ** 2.0
    elif cfg.alpha == 1 and cfg.beta == 0:
        idx, val = k * n - (k - 1) // 2, k**2 * (n - 0.5) ** 2
    else:
        idx, val = k * n - k // 2 + 1, k**2 * (n - 0.5) ** 2
    keep = idx <= n_max
    return idx[keep], val[keep]


def check_degeneration_spectrum(spec: Spectrum) -> DegenerationReport:
    idx, forced = designated_indices(spec.config, len(spec))
    dev = np.abs(spec.values[idx - 1] - forced)
    return DegenerationReport(idx, forced, dev)


def trig_sum_T(n: int, cfg: ProblemConfig) -> int:
    """``T_n = sum_{j<k} cos(2 j n a)``: ``k`` if ``k`` divides ``n``, else 0."""
    k, a = cfg.k, cfg.a
    j = np.arange(1, (k - 1) // 2 + 1)
    explicit = 1 + 2 * np.sum(np.cos(2 * j * n * a)) + (1 + (-1) ** k) / 2 * math.cos(PI * n)
    closed = k if n % k == 0 else 0
    if abs(explicit - closed) > 1e-9 * k:
        raise ArithmeticError(f"T_{n} mismatch: {explicit} vs {closed}")
    return closed
