"""Problem configuration, grids, function representations and spectra.

A problem ``L(q, pi/k, alpha, beta)`` is described by :class:`ProblemConfig`.
Functions on ``(0, pi)`` live on a :class:`Grid` made of ``k`` panels of
equal length ``a = pi/k``.  Every panel carries the same symmetric set of
reference nodes, so the shifts ``t -> t + j*a`` and reflections
``t -> j*a - t`` used throughout map grid points onto grid points.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from numpy.polynomial import legendre


class FrozenSLError(Exception):
    """Base class for errors raised by this package."""


class CaseError(FrozenSLError, ValueError):
    """An operation was called for the wrong (degenerate/non-degenerate) case."""


class NotRealizableError(FrozenSLError):
    """A spectrum violates the degeneration condition of its case."""


class RootFindingError(FrozenSLError):
    """An eigenvalue could not be located."""


# ---------------------------------------------------------------------------
# configuration


class CaseLabel(enum.Enum):
    I = "i"
    II = "ii"
    III = "iii"
    IV = "iv"
    V = "v"
    VI = "vi"

    @property
    def degenerate(self) -> bool:
        return self in (CaseLabel.I, CaseLabel.II, CaseLabel.III)


@dataclass(frozen=True)
class ProblemConfig:
    """Boundary orders ``alpha, beta`` and the integer ``k = pi/a``."""

    alpha: int
    beta: int
    k: int

    def __post_init__(self):
        if self.alpha not in (0, 1) or self.beta not in (0, 1):
            raise ValueError("alpha and beta must be 0 or 1")
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError("k must be a positive integer")
        object.__setattr__(self, "k", int(self.k))

    @property
    def a(self) -> float:
        return math.pi / self.k

    @property
    def b(self) -> int:
        return (-1) ** (self.alpha + self.beta)

    @property
    def c(self) -> int:
        return (-1) ** (1 + self.beta)

    @property
    def sign(self) -> int:
        """``(-1)**(alpha*beta)``."""
        return (-1) ** (self.alpha * self.beta)

    @property
    def case(self) -> CaseLabel:
        return classify_case(self)

    @property
    def degenerate(self) -> bool:
        return classify_case(self).degenerate

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "k": self.k}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        try:
            alpha, beta, k = d["alpha"], d["beta"], d["k"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"config needs alpha, beta, k: {exc}") from None
        if isinstance(k, bool) or not isinstance(k, int):
            raise ValueError("k must be an integer")
        return cls(alpha, beta, k)


def classify_case(cfg: ProblemConfig) -> CaseLabel:
    """Return the group (i)-(vi); (i)-(iii) are the degenerate ones."""
    odd = cfg.k % 2 == 1
    if cfg.alpha == 0 and cfg.beta == 0:
        return CaseLabel.I
    if cfg.alpha == 0 and cfg.beta == 1:
        return CaseLabel.IV
    if cfg.alpha == 1 and cfg.beta == 0:
        return CaseLabel.II if odd else CaseLabel.V
    return CaseLabel.VI if odd else CaseLabel.III


def asymptotic_rho(n, cfg: ProblemConfig):
    """Unperturbed square root of the ``n``-th eigenvalue, ``n - (alpha+beta)/2``."""
    if np.any(np.asarray(n) < 1):
        raise ValueError("n must be >= 1")
    return n - (cfg.alpha + cfg.beta) / 2


# ---------------------------------------------------------------------------
# grids


@functools.lru_cache(maxsize=64)
def _reference_rule(m: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (0, 1); nodes are symmetric under s -> 1 - s."""
    if kind == "gauss":
        x, w = legendre.leggauss(m)
        return (x + 1) / 2, w / 2
    if kind == "midpoint":
        if m < 6:
            raise ValueError("midpoint panels need at least 6 samples")
        h = 1.0 / m
        s = (np.arange(m) + 0.5) * h
        w = np.full(m, h)
        # Euler-Maclaurin end correction h^2/24 (f'(1) - f'(0)), with
        # one-sided third-order derivative stencils; O(h^4) overall.
        x = np.arange(4) + 0.5
        e = np.linalg.solve(np.vander(x, 4, increasing=True).T, [0.0, 1.0, 0.0, 0.0])
        w[:4] -= h * e / 24
        w[-4:] -= h * e[::-1] / 24
        return s, w
    raise ValueError(f"unknown grid kind {kind!r}")


@dataclass(frozen=True)
class Grid:
    """``k`` panels of ``m`` nodes each covering ``(0, pi)``."""

    k: int
    m: int
    kind: str = "gauss"

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ValueError("k and m must be positive")
        _reference_rule(self.m, self.kind)

    @property
    def a(self) -> float:
        return math.pi / self.k

    @property
    def size(self) -> int:
        return self.k * self.m

    @property
    def ref_nodes(self) -> np.ndarray:
        return _reference_rule(self.m, self.kind)[0]

    @property
    def block_nodes(self) -> np.ndarray:
        """Nodes of a single panel mapped to ``(0, a)``."""
        return self.a * self.ref_nodes

    @property
    def block_weights(self) -> np.ndarray:
        return self.a * _reference_rule(self.m, self.kind)[1]

    @property
    def points(self) -> np.ndarray:
        j = np.arange(self.k)[:, None]
        return (self.a * (j + self.ref_nodes[None, :])).ravel()

    @property
    def weights(self) -> np.ndarray:
        return np.tile(self.block_weights, self.k)

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.dot(self.weights, values))

    def block_norm(self, block: np.ndarray) -> float:
        """L2 norm on ``(0, a)`` of one panel's samples."""
        return float(np.sqrt(np.dot(self.block_weights, np.abs(block) ** 2)))

    @classmethod
    def for_frequency(cls, k: int, rho_max: float, kind: str = "gauss") -> "Grid":
        """A gauss grid resolving oscillations up to ``cos(rho_max t)``."""
        m = max(48, int(math.ceil(0.7 * (rho_max + 8) * math.pi / k)) + 24)
        return cls(k, m, kind)


def panel_interpolate(values: np.ndarray, src: Grid, dst: Grid) -> np.ndarray:
    """Resample panel-wise smooth samples from ``src`` onto ``dst``."""
    if src.k != dst.k:
        raise ValueError("grids must have the same number of panels")
    if src == dst:
        return np.array(values, dtype=complex)
    blocks = np.asarray(values, dtype=complex).reshape(src.k, src.m)
    s_dst = dst.ref_nodes
    if src.kind == "gauss":
        x, w = legendre.leggauss(src.m)
        vander = legendre.legvander(x, src.m - 1)
        scale = (2 * np.arange(src.m) + 1) / 2
        coef = (blocks * w[None, :]) @ vander * scale[None, :]
        out = legendre.legval(2 * s_dst - 1, coef.T)
        return np.asarray(out).reshape(src.k, dst.m).ravel()
    from scipy.interpolate import CubicSpline

    s_src = src.ref_nodes
    out = np.empty((src.k, dst.m), dtype=complex)
    for j, blk in enumerate(blocks):
        spl_re = CubicSpline(s_src, blk.real)
        spl_im = CubicSpline(s_src, blk.imag)
        out[j] = spl_re(s_dst) + 1j * spl_im(s_dst)
    return out.ravel()


# ---------------------------------------------------------------------------
# function representations


def _as_complex(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=complex))


def cos_series(coeffs, x) -> np.ndarray:
    """Evaluate ``sum_n c_n cos(n x)``."""
    coeffs = _as_complex(coeffs)
    n = np.arange(len(coeffs))
    return np.cos(np.multiply.outer(np.asarray(x, dtype=float), n)) @ coeffs


def half_sine_series(coeffs, x) -> np.ndarray:
    """Evaluate ``sum_{n>=1} c_n sin((n - 1/2) x)``; ``coeffs[0]`` is ``n = 1``."""
    coeffs = _as_complex(coeffs)
    n = np.arange(1, len(coeffs) + 1) - 0.5
    return np.sin(np.multiply.outer(np.asarray(x, dtype=float), n)) @ coeffs


@dataclass(frozen=True, eq=False)
class Potential:
    """Samples of ``q`` on a grid, optionally backed by a finite cosine series."""

    grid: Grid
    values: np.ndarray
    coeffs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = _as_complex(self.values)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} samples, got {values.shape[0]}"
            )
        object.__setattr__(self, "values", values)
        if self.coeffs is not None:
            object.__setattr__(self, "coeffs", _as_complex(self.coeffs))

    @classmethod
    def from_cos(cls, coeffs, grid: Grid) -> "Potential":
        coeffs = _as_complex(coeffs)
        return cls(grid, cos_series(coeffs, grid.points), coeffs)

    @classmethod
    def from_function(cls, f: Callable, grid: Grid) -> "Potential":
        return cls(grid, np.asarray(f(grid.points), dtype=complex) * np.ones(grid.size))

    @classmethod
    def zero(cls, grid: Grid) -> "Potential":
        return cls(grid, np.zeros(grid.size), np.zeros(1))

    @property
    def blocks(self) -> np.ndarray:
        """Samples reshaped to ``(k, m)``; row ``j`` covers ``(j a, (j+1) a)``."""
        return self.values.reshape(self.grid.k, self.grid.m)

    def resample(self, grid: Grid) -> "Potential":
        if grid == self.grid:
            return self
        if self.coeffs is not None:
            return Potential.from_cos(self.coeffs, grid)
        return Potential(grid, panel_interpolate(self.values, self.grid, grid))

    def to_cos(self, n_max: int) -> np.ndarray:
        """Cosine coefficients ``c_0..c_{n_max}`` by quadrature."""
        n = np.arange(n_max + 1)
        basis = np.cos(np.multiply.outer(n, self.grid.points))
        c = (basis * self.grid.weights) @ self.values * (2 / math.pi)
        c[0] /= 2
        return c

    def l2_norm(self) -> float:
        return float(np.sqrt(np.dot(self.grid.weights, np.abs(self.values) ** 2)))

    def block_l2_norm(self, j: int = 0) -> float:
        return self.grid.block_norm(self.blocks[j])

    def __call__(self, x):
        if self.coeffs is None:
            raise ValueError("pointwise evaluation needs a Fourier representation")
        return cos_series(self.coeffs, x)


@dataclass(frozen=True, eq=False)
class WFunction:
    """The kernel ``W`` of the characteristic function, tagged with ``(alpha, beta)``.

    Coefficients refer to ``{cos n t}_{n>=0}`` when ``alpha == beta`` and to
    ``{sin((n - 1/2) t)}_{n>=1}`` otherwise.  At least one of ``values`` (on
    ``grid``) and ``coeffs`` must be given.
    """

    alpha: int
    beta: int
    grid: Grid | None = None
    values: np.ndarray | None = None
    coeffs: np.ndarray | None = None

    def __post_init__(self):
        if self.values is None and self.coeffs is None:
            raise ValueError("WFunction needs samples or coefficients")
        if self.values is not None:
            if self.grid is None:
                raise ValueError("samples need a grid")
            values = _as_complex(self.values)
            if values.shape != (self.grid.size,):
                raise ValueError("sample count does not match grid")
            object.__setattr__(self, "values", values)
        if self.coeffs is not None:
            object.__setattr__(self, "coeffs", _as_complex(self.coeffs))

    @property
    def cosine_basis(self) -> bool:
        return self.alpha == self.beta

    @classmethod
    def zero(cls, cfg: ProblemConfig, grid: Grid | None = None) -> "WFunction":
        if grid is None:
            return cls(cfg.alpha, cfg.beta, coeffs=np.zeros(1))
        return cls(cfg.alpha, cfg.beta, grid, np.zeros(grid.size), np.zeros(1))

    def evaluate_series(self, x) -> np.ndarray:
        if self.coeffs is None:
            raise ValueError("no coefficients available")
        if self.cosine_basis:
            return cos_series(self.coeffs, x)
        return half_sine_series(self.coeffs, x)

    def sample(self, grid: Grid) -> np.ndarray:
        """Samples on ``grid``, from the series when available."""
        if self.coeffs is not None:
            return self.evaluate_series(grid.points)
        if grid == self.grid:
            return self.values
        return panel_interpolate(self.values, self.grid, grid)

    def on(self, grid: Grid) -> "WFunction":
        return WFunction(self.alpha, self.beta, grid, self.sample(grid), self.coeffs)

    @property
    def blocks(self) -> np.ndarray:
        if self.values is None:
            raise ValueError("no samples available; call .on(grid) first")
        return self.values.reshape(self.grid.k, self.grid.m)

    def to_coeffs(self, n_modes: int) -> np.ndarray:
        """Project grid samples on the first ``n_modes`` basis functions."""
        if self.values is None:
            c = np.zeros(n_modes + (1 if self.cosine_basis else 0), dtype=complex)
            c[: min(len(c), len(self.coeffs))] = self.coeffs[: len(c)]
            return c
        t = self.grid.points
        if self.cosine_basis:
            n = np.arange(n_modes + 1)
            basis = np.cos(np.multiply.outer(n, t))
        else:
            n = np.arange(1, n_modes + 1) - 0.5
            basis = np.sin(np.multiply.outer(n, t))
        c = (basis * self.grid.weights) @ self.values * (2 / math.pi)
        if self.cosine_basis:
            c[0] /= 2
        return c

    def mean(self) -> complex:
        if self.values is None:
            return complex(self.coeffs[0]) if self.cosine_basis else complex(
                np.sum(self.coeffs / (np.arange(1, len(self.coeffs) + 1) - 0.5)) / math.pi
            )
        return self.grid.integrate(self.values) / math.pi

    def l2_norm(self) -> float:
        if self.values is not None:
            return float(np.sqrt(np.dot(self.grid.weights, np.abs(self.values) ** 2)))
        c = np.abs(self.coeffs) ** 2
        if self.cosine_basis:
            return float(np.sqrt(math.pi * c[0] + math.pi / 2 * np.sum(c[1:])))
        return float(np.sqrt(math.pi / 2 * np.sum(c)))


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues ``lambda_1..lambda_N`` in index order."""

    values: np.ndarray
    config: ProblemConfig
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_complex(self.values))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def residuals(self) -> np.ndarray:
        return spectrum_residuals(self)[0]

    @classmethod
    def unperturbed(cls, cfg: ProblemConfig, n_max: int) -> "Spectrum":
        return cls(asymptotic_rho(np.arange(1, n_max + 1), cfg) ** 2, cfg)


def spectrum_residuals(spec: Spectrum, bound: float = 1.0) -> tuple[np.ndarray, bool]:
    """Residuals ``kappa_n = n (sqrt(lambda_n) - rho_n)`` and an l2 plausibility flag.

    The square root branch is the one closest to ``rho_n``.  The flag is a
    heuristic: the sum of ``|kappa_n|**2`` over the second half of the stored
    range must stay below ``bound``.
    """
    lam = spec.values
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if not np.all(np.isfinite(lam)):
        raise ValueError("spectrum contains non-finite values")
    n = np.arange(1, lam.size + 1)
    seed = asymptotic_rho(n, spec.config)
    root = np.sqrt(lam)
    root = np.where(np.abs(root - seed) <= np.abs(-root - seed), root, -root)
    kappa = n * (root - seed)
    tail = np.sum(np.abs(kappa[lam.size // 2 :]) ** 2)
    return kappa, bool(tail < bound)


# ---------------------------------------------------------------------------
# restriction operators K in q(a - t) = K(q(a + t))


class FrozenK:
    """Base for the restriction operator ``K`` acting on functions on ``(0, a)``."""

    def apply(self, f: np.ndarray, grid: Grid) -> np.ndarray:
        raise NotImplementedError

    def solve_identity_plus(self, rhs: np.ndarray, grid: Grid) -> np.ndarray:
        """Return ``u`` with ``u + K(u) = rhs``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class Identity(FrozenK):
    def apply(self, f, grid):
        return np.array(f, dtype=complex)

    def solve_identity_plus(self, rhs, grid):
        return np.asarray(rhs, dtype=complex) / 2

    def to_dict(self):
        return {"type": "identity"}


@dataclass(frozen=True)
class Scalar(FrozenK):
    kappa: complex

    def __post_init__(self):
        if abs(1 + complex(self.kappa)) < 1e-14:
            raise ValueError("I + K is singular for kappa = -1")

    def apply(self, f, grid):
        return complex(self.kappa) * np.asarray(f, dtype=complex)

    def solve_identity_plus(self, rhs, grid):
        return np.asarray(rhs, dtype=complex) / (1 + complex(self.kappa))

    def to_dict(self):
        return {"type": "scalar", "kappa": complex(self.kappa)}


class ConstantFunction(FrozenK):
    """``K(f) = p`` for every ``f``; fixes ``q(x) = p(a - x)`` on ``(0, a)``.

    ``p`` is either a callable on ``(0, a)`` or an array of samples at the
    panel nodes of the grid in use.
    """

    def __init__(self, p: Callable | Sequence[complex] | np.ndarray):
        self.p = p

    def values(self, grid: Grid) -> np.ndarray:
        if callable(self.p):
            return np.asarray(self.p(grid.block_nodes), dtype=complex) * np.ones(grid.m)
        p = _as_complex(self.p)
        if p.shape != (grid.m,):
            raise ValueError(f"p has {p.size} samples, panel has {grid.m}")
        return p

    def apply(self, f, grid):
        return self.values(grid)

    def solve_identity_plus(self, rhs, grid):
        return np.asarray(rhs, dtype=complex) - self.values(grid)

    def to_dict(self):
        return {"type": "constant"}


class Matrix(FrozenK):
    """Linear ``K`` given as a matrix acting on one panel's samples."""

    def __init__(self, mat):
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        if mat.shape[0] != mat.shape[1]:
            raise ValueError("K matrix must be square")
        eye_plus = np.eye(mat.shape[0]) + mat
        if np.linalg.cond(eye_plus) > 1e12:
            raise ValueError("I + K is numerically singular")
        self.mat = mat
        self._lu = scipy.linalg.lu_factor(eye_plus)

    def _check(self, grid):
        if self.mat.shape[0] != grid.m:
            raise ValueError("K matrix size does not match the panel resolution")

    def apply(self, f, grid):
        self._check(grid)
        return self.mat @ np.asarray(f, dtype=complex)

    def solve_identity_plus(self, rhs, grid):
        self._check(grid)
        return scipy.linalg.lu_solve(self._lu, np.asarray(rhs, dtype=complex))

    def to_dict(self):
        return {"type": "matrix", "size": int(self.mat.shape[0])}
