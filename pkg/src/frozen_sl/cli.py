"""Command-line front end: forward, inverse, roundtrip and isospectral runs.

All structured output is JSON with complex numbers as ``[re, im]`` pairs and
floats printed with 17 significant digits, so identical runs give identical
files.  Run metadata that varies between runs (wall time) lives only in the
accompanying ``manifest.json``.

Exit codes: 0 ok, 2 usage or schema error, 3 numerical failure,
4 spectrum not realizable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy
from scipy.interpolate import CubicSpline

from . import __version__
from .core import (
    CaseError,
    ConstantFunction,
    FrozenK,
    Grid,
    Identity,
    Matrix,
    NotRealizableError,
    panel_interpolate,
    Potential,
    ProblemConfig,
    RootFindingError,
    Scalar,
    Spectrum,
)
from .forward import CharFn, check_degeneration_spectrum, compute_spectrum
from .inverse import InverseOptions, isospectral_family, recover_degenerate, recover_nondegenerate
from .operators import w_from_q_matrix

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_UNREALIZABLE = 0, 2, 3, 4


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# deterministic JSON


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be written as JSON")
    if x == 0:
        return "0"
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_fmt_float(obj.real)}, {_fmt_float(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        flat = (bool, int, float, str, np.integer, np.floating, np.bool_)
        if all(isinstance(v, flat) for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(inner + p for p in parts) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with fixed 17-significant-digit floats."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj))


# ---------------------------------------------------------------------------
# schema parsing


def _load(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return data


def _complex_list(values, where: str) -> np.ndarray:
    if not isinstance(values, list):
        raise SchemaError(f"{where}: 'values' must be a list")
    out = np.empty(len(values), dtype=complex)
    for i, v in enumerate(values):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out[i] = v
        elif (
            isinstance(v, list)
            and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
        ):
            out[i] = complex(v[0], v[1])
        else:
            raise SchemaError(f"{where}: entry {i} is not a number or [re, im] pair")
    if not np.all(np.isfinite(out)):
        raise SchemaError(f"{where}: non-finite entries")
    return out


def load_config(path) -> ProblemConfig:
    data = _load(path)
    try:
        return ProblemConfig.from_dict(data)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def load_potential(path, cfg: ProblemConfig, n_hint: int = 0) -> Potential:
    data = _load(path)
    kind = data.get("type")
    values = _complex_list(data.get("values"), str(path))
    if kind == "fourier-cos":
        if values.size == 0:
            raise SchemaError(f"{path}: empty coefficient list")
        grid = Grid.for_frequency(cfg.k, max(n_hint + 2, values.size))
        return Potential.from_cos(values, grid)
    if kind == "grid":
        if values.size == 0 or values.size % cfg.k:
            raise SchemaError(f"{path}: sample count must be a positive multiple of k={cfg.k}")
        m = values.size // cfg.k
        if m < 6:
            raise SchemaError(f"{path}: need at least 6 samples per subinterval")
        return Potential(Grid(cfg.k, m, "midpoint"), values)
    raise SchemaError(f"{path}: 'type' must be 'grid' or 'fourier-cos'")


def load_spectrum(path, cfg: ProblemConfig) -> Spectrum:
    data = _load(path)
    values = _complex_list(data.get("values"), str(path))
    if values.size == 0:
        raise SchemaError(f"{path}: empty spectrum")
    return Spectrum(values, cfg)


def _sampled_function(values: np.ndarray, a: float):
    """Callable on ``(0, a)`` interpolating midpoint samples."""
    s = (np.arange(values.size) + 0.5) * a / values.size
    re, im = CubicSpline(s, values.real), CubicSpline(s, values.imag)
    return lambda x: re(x) + 1j * im(x)


def load_p(path, cfg: ProblemConfig):
    values = _complex_list(_load(path).get("values"), str(path))
    if values.size < 4:
        raise SchemaError(f"{path}: need at least 4 samples of p")
    return _sampled_function(values, cfg.a)


def parse_K(spec: str, cfg: ProblemConfig) -> tuple[FrozenK, Grid | None]:
    """``identity | scalar:kappa | const:path | matrix:path``; a matrix fixes the grid."""
    kind, _, arg = spec.partition(":")
    if kind == "identity" and not arg:
        return Identity(), None
    if kind == "scalar" and arg:
        try:
            kappa = complex(arg.replace(" ", ""))
        except ValueError:
            raise SchemaError(f"--K scalar: cannot parse {arg!r}") from None
        try:
            return Scalar(kappa), None
        except ValueError as exc:
            raise SchemaError(f"--K scalar: {exc}") from None
    if kind == "const" and arg:
        return ConstantFunction(load_p(arg, cfg)), None
    if kind == "matrix" and arg:
        rows = _load(arg).get("values")
        if not isinstance(rows, list) or not rows:
            raise SchemaError(f"{arg}: 'values' must be a non-empty list of rows")
        mat = np.array([_complex_list(r, arg) for r in rows])
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise SchemaError(f"{arg}: K matrix must be square")
        if mat.shape[0] < 6:
            raise SchemaError(f"{arg}: K matrix needs at least 6 rows")
        try:
            return Matrix(mat), Grid(cfg.k, mat.shape[0], "midpoint")
        except ValueError as exc:
            raise SchemaError(f"{arg}: {exc}") from None
    raise SchemaError(f"cannot parse --K {spec!r}; use identity, scalar:κ, const:path or matrix:path")


# ---------------------------------------------------------------------------
# helpers


def potential_json(q: Potential, samples: int) -> dict:
    """Uniform midpoint samples, ``samples`` per subinterval."""
    dst = Grid(q.grid.k, samples, "midpoint")
    vals = panel_interpolate(q.values, q.grid, dst)
    return {"type": "grid", "values": [complex(v) for v in vals]}


def relative_l2_error(q_hat: Potential, q: Potential) -> float:
    ref = q.resample(q_hat.grid)
    diff = math.sqrt(q_hat.grid.integrate(np.abs(q_hat.values - ref.values) ** 2).real)
    norm = ref.l2_norm()
    # for q = 0 the absolute error is reported
    return float(diff / norm) if norm > 0 else float(diff)


def _inverse_opts(args, grid: Grid | None, n_explicit: int | None) -> InverseOptions:
    return InverseOptions(
        n_explicit=n_explicit,
        n_modes=args.modes,
        grid=grid,
        reprojection=args.reprojection,
        deg_tol=args.tol_deg,
    )


def _reconstruct(spec: Spectrum, cfg: ProblemConfig, args, n_explicit: int | None) -> Potential:
    if cfg.degenerate:
        if args.K is None:
            raise CaseError(f"case {cfg.case.value} is degenerate: --K is required")
        K, grid = parse_K(args.K, cfg)
        return recover_degenerate(spec, cfg, K, _inverse_opts(args, grid, n_explicit))
    return recover_nondegenerate(spec, cfg, _inverse_opts(args, None, n_explicit))


def _spectrum_record(spec: Spectrum) -> dict:
    verification = spec.info.get("verification", {})
    return {
        "config": spec.config.to_dict(),
        "values": [complex(v) for v in spec.values],
        "residuals": [complex(v) for v in spec.residuals],
        "verification": verification,
    }


def _options_record(args) -> dict:
    keep = ("n", "modes", "tol_root", "tol_deg", "K", "sweep", "parallel", "reprojection", "samples")
    return {k: getattr(args, k) for k in keep if hasattr(args, k)}


def _manifest(args, inputs: list, outputs: list, wall: float) -> dict:
    return {
        "command": args.command,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "options": _options_record(args),
        "versions": {
            "frozen_sl": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": wall,
    }


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_forward(args) -> tuple[list, list]:
    cfg = load_config(args.config)
    q = load_potential(args.potential, cfg, args.n)
    spec = compute_spectrum(q, cfg, args.n, tol_root=args.tol_root)
    out = _outdir(args)
    write_json(out / "spectrum.json", _spectrum_record(spec))

    delta = CharFn(cfg, w_from_q_matrix(q, cfg))
    rho_max = args.rho_max if args.rho_max is not None else args.n + 1.0
    rho = np.linspace(0.0, rho_max, args.rho_points)
    vals = delta.at_rho(rho)
    with open(out / "delta_samples.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho", "re_delta", "im_delta"])
        for r, v in zip(rho, vals):
            w.writerow([_fmt_float(r), _fmt_float(v.real), _fmt_float(v.imag)])
    return [args.config, args.potential], [out / "spectrum.json", out / "delta_samples.csv"]


def cmd_inverse(args) -> tuple[list, list]:
    cfg = load_config(args.config)
    spec = load_spectrum(args.spectrum, cfg)
    q = _reconstruct(spec, cfg, args, args.n)
    out = _outdir(args)
    write_json(out / "potential.json", potential_json(q, args.samples))
    report = {"config": cfg.to_dict(), "case": cfg.case.value, "degenerate": cfg.degenerate}
    report.update(q.meta)
    if cfg.degenerate:
        rep = check_degeneration_spectrum(spec)
        report["degeneration"] = {
            "indices": rep.indices.tolist(),
            "deviation": rep.deviation.tolist(),
        }
    write_json(out / "report.json", report)
    return [args.config, args.spectrum], [out / "potential.json", out / "report.json"]


def _roundtrip_level(q: Potential, cfg: ProblemConfig, args, n: int) -> dict:
    spec = compute_spectrum(q, cfg, n, tol_root=args.tol_root)
    q_hat = _reconstruct(spec, cfg, args, n)
    fwd = compute_spectrum(q_hat, cfg, min(n, 20), tol_root=args.tol_root)
    return {
        "n": n,
        "relative_l2_error": relative_l2_error(q_hat, q),
        "forward_max_abs_delta": spec.info.get("max_abs_delta"),
        "respectrum_max_deviation": float(np.max(np.abs(fwd.values - spec.values[: len(fwd)]))),
        "n_modes": q_hat.meta.get("n_modes"),
        "sign": q_hat.meta.get("sign"),
    }


def cmd_roundtrip(args) -> tuple[list, list]:
    cfg = load_config(args.config)
    if cfg.degenerate and args.K is None:
        raise CaseError(f"case {cfg.case.value} is degenerate: --K is required")
    if args.K is not None:
        parse_K(args.K, cfg)  # fail early on a bad specification
    levels = [20, 40, 80] if args.sweep else [args.n]
    q = load_potential(args.potential, cfg, max(levels))
    if args.parallel and len(levels) > 1:
        with ThreadPoolExecutor(max_workers=len(levels)) as pool:
            results = list(pool.map(lambda n: _roundtrip_level(q, cfg, args, n), levels))
    else:
        results = [_roundtrip_level(q, cfg, args, n) for n in levels]
    errs = [r["relative_l2_error"] for r in results]
    report = {
        "config": cfg.to_dict(),
        "levels": results,
        "monotone_decreasing": all(x > y for x, y in zip(errs, errs[1:])),
    }
    out = _outdir(args)
    write_json(out / "report.json", report)
    return [args.config, args.potential], [out / "report.json"]


def cmd_isospectral(args) -> tuple[list, list]:
    cfg = load_config(args.config)
    if not cfg.degenerate:
        raise CaseError(f"case {cfg.case.value} is not degenerate; the spectrum fixes q")
    spec = load_spectrum(args.spectrum, cfg)
    p_dir = Path(args.p_dir)
    if not p_dir.is_dir():
        raise SchemaError(f"{p_dir}: not a directory")
    p_files = sorted(p_dir.glob("*.json"))
    ps = [load_p(p, cfg) for p in p_files]
    family = isospectral_family(spec, cfg, ps, _inverse_opts(args, None, args.n_explicit))
    n_cmp = min(args.n, len(spec))

    def spectrum_of(q):
        return compute_spectrum(q, cfg, n_cmp, tol_root=args.tol_root).values

    if args.parallel and family:
        with ThreadPoolExecutor() as pool:
            spectra = list(pool.map(spectrum_of, family))
    else:
        spectra = [spectrum_of(q) for q in family]
    dist = [[float(np.max(np.abs(s - t))) for t in spectra] for s in spectra]

    out = _outdir(args)
    outputs = []
    for path, q in zip(p_files, family):
        target = out / f"potential_{path.stem}.json"
        write_json(target, potential_json(q, args.samples))
        outputs.append(target)
    summary = {
        "config": cfg.to_dict(),
        "members": [p.stem for p in p_files],
        "compared_eigenvalues": n_cmp,
        "pairwise_max_deviation": dist,
        "block_l2_norms": [q.block_l2_norm(0) for q in family],
    }
    write_json(out / "family.json", summary)
    outputs.append(out / "family.json")
    return [args.config, args.spectrum, *p_files], outputs


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="config JSON {alpha, beta, k}")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--tol-root", type=float, default=1e-13, help="Newton tolerance in rho")
    common.add_argument("--tol-deg", type=float, default=1e-6,
                        help="absolute tolerance on forced eigenvalues")
    common.add_argument("--modes", type=int, default=None, help="Fourier modes of W to extract")
    common.add_argument("--parallel", action="store_true", help="run independent solves concurrently")
    common.add_argument("--reprojection", choices=("panel", "none"), default="panel",
                        help="panel-wise polynomial refit of the extracted W")
    common.add_argument("--samples", type=int, default=64,
                        help="midpoint samples per subinterval in written potentials")

    p = argparse.ArgumentParser(prog="frozen-sl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", parents=[common], help="eigenvalues of a given potential")
    f.add_argument("--potential", required=True)
    f.add_argument("--n", type=int, default=20, help="number of eigenvalues")
    f.add_argument("--rho-max", type=float, default=None, help="upper end of the CSV rho grid")
    f.add_argument("--rho-points", type=int, default=401)
    f.set_defaults(func=cmd_forward)

    i = sub.add_parser("inverse", parents=[common], help="potential from a spectrum")
    i.add_argument("--spectrum", required=True)
    i.add_argument("--K", default=None, help="identity | scalar:κ | const:path | matrix:path")
    i.add_argument("--n", type=int, default=None, help="eigenvalues used (default min(len, 60))")
    i.set_defaults(func=cmd_inverse)

    r = sub.add_parser("roundtrip", parents=[common], help="forward then inverse, with error report")
    r.add_argument("--potential", required=True)
    r.add_argument("--K", default=None)
    r.add_argument("--n", type=int, default=60)
    r.add_argument("--sweep", action="store_true", help="run n = 20, 40, 80")
    r.set_defaults(func=cmd_roundtrip)

    s = sub.add_parser("isospectral", parents=[common], help="family of potentials sharing a spectrum")
    s.add_argument("--spectrum", required=True)
    s.add_argument("--p-dir", required=True, help="directory of p samples on (0, a), one JSON each")
    s.add_argument("--n", type=int, default=20, help="eigenvalues compared between members")
    s.add_argument("--n-explicit", type=int, default=None)
    s.set_defaults(func=cmd_isospectral)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("n", "modes", "samples"):
        val = getattr(args, name, None)
        if val is not None and val < 1:
            parser.error(f"--{name} must be positive")
    t0 = time.perf_counter()
    try:
        inputs, outputs = args.func(args)
    except (SchemaError, CaseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotRealizableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREALIZABLE
    except (RootFindingError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    write_json(out / "manifest.json", _manifest(args, inputs, outputs, time.perf_counter() - t0))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
