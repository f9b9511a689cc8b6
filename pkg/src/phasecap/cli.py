"""Batch front end for the capacity pipeline.

Each subcommand builds a phase field (or loads one), runs one pipeline
stage, and writes a CSV or JSON report.  Every pipeline is deterministic,
so identical configuration yields bit-identical output files.

Exit codes: 0 ok, 2 usage, 3 admissibility, 4 non-convergence.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .critical import classify, fit_exponent, save_regime_json
from .field import (
    FIELD_MAGIC,
    Grid,
    PhaseModel,
    ScalarField,
    check_admissible_levels,
    load_field,
    sample_phase,
)
from .fiber import Region, WeightTable, load_weight_csv, save_weight_csv, weight_table
from .fullcap import (
    CapacityReport,
    ComparisonViolationError,
    ConstraintSet,
    MinimizeOptions,
    compare_bound,
    compose_profile,
    p_capacity,
    polarization_gap,
    save_capacity_json,
    tangential_decompose,
)
from .oracles import monomial_capacity, planar_capacity, radial_capacity
from .reduced import (
    reduced_capacity,
    reparametrize_table,
    resistance,
    save_profile_csv,
    save_reduced_json,
)
from .serialize import dump_json

__all__ = ["main", "entry"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ADMISSIBILITY = 3
EXIT_NONCONVERGENCE = 4

_MODEL_DEFAULTS = {
    "planar": {"extent": "-0.25:1.25,0:1", "grid": "129,65",
               "a": 0.0, "b": 1.0},
    "radial": {"extent": "-3.2:3.2,-3.2:3.2", "grid": "257,257",
               "a": 1.0, "b": math.e, "center": "0,0"},
    "monomial": {"extent": "-1:1,0:1", "grid": "129,65",
                 "a": 0.04, "b": 0.25, "gamma": 2.0},
}
# classify fits near the degenerate level, which needs finer resolution
_CLASSIFY_GRID = {"monomial": "257,129"}

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------

def _read_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(EXIT_USAGE,
                                   f"{path}:{lineno}: expected 'key = value'")
                key, value = line.split("=", 1)
                out[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise CliError(EXIT_USAGE, f"cannot read config file: {exc}")
    return out


def _coerce(key: str, raw: str, kind):
    if kind is bool:
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise CliError(EXIT_USAGE, f"config key {key}: not a boolean: {raw}")
    try:
        return kind(raw)
    except ValueError:
        raise CliError(EXIT_USAGE, f"config key {key}: bad value: {raw}")


class Settings:
    """Flag > config file > default resolution for one invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = _read_config(args.config) if args.config else {}

    def get(self, key: str, default=None, kind=str):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.file:
            return _coerce(key, self.file[key], kind)
        return default


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise CliError(EXIT_USAGE, f"bad --grid value: {text}")
    if not 2 <= len(dims) <= 3 or any(d < 2 for d in dims):
        raise CliError(EXIT_USAGE, f"bad --grid value: {text}")
    return dims


def _parse_extent(text: str, ndim: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    parts = text.split(",")
    if len(parts) != ndim:
        raise CliError(EXIT_USAGE,
                       f"--extent needs {ndim} lo:hi ranges, got: {text}")
    lo, hi = [], []
    for part in parts:
        try:
            left, right = part.split(":")
            lo.append(float(left))
            hi.append(float(right))
        except ValueError:
            raise CliError(EXIT_USAGE, f"bad --extent range: {part}")
    return tuple(lo), tuple(hi)


def _parse_region(text: str) -> Region:
    lo, hi = [], []
    for part in text.split(","):
        if ".." not in part:
            raise CliError(EXIT_USAGE, f"bad --region range: {part}")
        left, right = part.split("..", 1)
        try:
            lo.append(float(left))
            hi.append(float(right))
        except ValueError:
            raise CliError(EXIT_USAGE, f"bad --region range: {part}")
    try:
        return Region(tuple(lo), tuple(hi))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"bad --region: {exc}")


def _parse_center(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise CliError(EXIT_USAGE, f"bad --center value: {text}")


def _model_default(settings: Settings, model: str, key: str, fallback=None):
    return _MODEL_DEFAULTS.get(model, {}).get(key, fallback)


def _sniff_field_file(path: str) -> bool:
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
    except OSError as exc:
        raise CliError(EXIT_USAGE, f"cannot read input: {exc}")
    return first.strip() == FIELD_MAGIC


def _build_field(settings: Settings, model: str,
                 grid_override: str | None = None) -> ScalarField:
    if model == "file":
        path = settings.get("input")
        if path is None:
            raise CliError(EXIT_USAGE, "--model file requires --in PATH")
        try:
            return load_field(path)
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_ADMISSIBILITY, f"cannot load field: {exc}")
    dims = _parse_dims(settings.get(
        "grid", grid_override or _model_default(settings, model, "grid")))
    extent = settings.get("extent", _model_default(settings, model, "extent"))
    lo, hi = _parse_extent(extent, len(dims))
    grid = Grid.from_extent(dims, lo, hi)
    if model == "planar":
        phase = PhaseModel.planar(axis=0)
    elif model == "radial":
        center = _parse_center(settings.get(
            "center", _model_default(settings, model, "center", "0,0")))
        phase = PhaseModel.radial(center)
    elif model == "monomial":
        gamma = settings.get(
            "gamma", _model_default(settings, model, "gamma", 2.0), float)
        phase = PhaseModel.monomial(gamma=gamma, axis=0)
    else:
        raise CliError(EXIT_USAGE, f"unknown model: {model}")
    try:
        return sample_phase(phase, grid)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc))


def _levels_pair(settings: Settings, model: str) -> tuple[float, float]:
    a = settings.get("a", _model_default(settings, model, "a"), float)
    b = settings.get("b", _model_default(settings, model, "b"), float)
    if a is None or b is None:
        raise CliError(EXIT_USAGE, "levels --a and --b are required")
    if not a < b:
        raise CliError(EXIT_USAGE, f"need a < b, got a={a} b={b}")
    return float(a), float(b)


def _solver_options(settings: Settings, p: float) -> MinimizeOptions:
    try:
        return MinimizeOptions(
            p=p,
            tol_rel=settings.get("tol", 1e-10, float),
            max_iter=settings.get("max_iter", 20000, int),
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc))


def _get_p(settings: Settings) -> float:
    p = settings.get("p", 2.0, float)
    if p <= 1.0:
        raise CliError(EXIT_USAGE, f"p must exceed 1, got {p}")
    return float(p)


def _write_json(payload: dict, out: str | None) -> None:
    if out is None:
        dump_json(sys.stdout, payload)
    else:
        dump_json(out, payload)


def _plot_stem(out: str | None, suffix: str) -> str:
    if out is None:
        return suffix
    stem = out.rsplit(".", 1)[0] if "." in out.rsplit("/", 1)[-1] else out
    return f"{stem}_{suffix}"


def _build_table(settings: Settings, model: str, p: float,
                 a: float, b: float) -> WeightTable:
    """Weight table over linspace(a, b, levels) for a model or field file;
    a CSV input is loaded as-is."""
    if model == "file":
        path = settings.get("input")
        if path is None:
            raise CliError(EXIT_USAGE, "--model file requires --in PATH")
        if not _sniff_field_file(path):
            try:
                return load_weight_csv(path, p)
            except (OSError, ValueError) as exc:
                raise CliError(EXIT_ADMISSIBILITY,
                               f"cannot load weight table: {exc}")
    fld = _build_field(settings, model)
    n = settings.get("levels", 256, int)
    region_text = settings.get("region")
    region = _parse_region(region_text) if region_text else None
    try:
        return weight_table(fld, p, np.linspace(a, b, n), region=region)
    except ValueError as exc:
        raise CliError(EXIT_ADMISSIBILITY, str(exc))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_weight(settings: Settings) -> int:
    model = settings.get("model", "planar")
    p = _get_p(settings)
    if model == "file" and not _sniff_field_file(settings.get("input") or ""):
        raise CliError(EXIT_USAGE, "weight needs a phase field input")
    a, b = _levels_pair(settings, model)
    table = _build_table(settings, model, p, a, b)
    out = settings.get("out")
    if out is None:
        save_weight_csv(table, sys.stdout)
    else:
        save_weight_csv(table, out)
    if settings.get("plot", False, bool):
        from .plots import plot_weight_table

        plot_weight_table(table, _plot_stem(out, "weight.png"))
    return EXIT_OK


def cmd_reduce(settings: Settings) -> int:
    model = settings.get("model", "planar")
    p = _get_p(settings)
    if model == "file" and not _sniff_field_file(settings.get("input") or ""):
        path = settings.get("input")
        if path is None:
            raise CliError(EXIT_USAGE, "--model file requires --in PATH")
        try:
            table = load_weight_csv(path, p)
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_ADMISSIBILITY, f"cannot load weight table: {exc}")
        a = settings.get("a", float(table.t[0]), float)
        b = settings.get("b", float(table.t[-1]), float)
    else:
        a, b = _levels_pair(settings, model)
        table = _build_table(settings, model, p, a, b)
    if settings.get("reparam") == "cubic":
        table = reparametrize_table(table, lambda t: t ** 3 + t,
                                    lambda t: 3.0 * t ** 2 + 1.0)
        a, b = a ** 3 + a, b ** 3 + b
    elif settings.get("reparam") is not None:
        raise CliError(EXIT_USAGE,
                       f"unknown --reparam: {settings.get('reparam')}")
    try:
        report = reduced_capacity(table, a, b)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    out = settings.get("out")
    if out is None:
        save_reduced_json(report, sys.stdout)
    else:
        save_reduced_json(report, out)
    if settings.get("emit_profile", False, bool):
        if report.profile is None:
            raise CliError(EXIT_ADMISSIBILITY,
                           "divergent branch has no optimal profile")
        if out is None:
            raise CliError(EXIT_USAGE, "--emit-profile requires --out")
        save_profile_csv(report.profile, _plot_stem(out, "profile.csv"))
    if settings.get("plot", False, bool) and report.profile is not None:
        from .plots import plot_profile

        plot_profile(report.profile, _plot_stem(out, "profile.png"))
    return EXIT_OK


def _ball_constraints(fld: ScalarField, a: float, b: float,
                      radius: float) -> ConstraintSet:
    """Mismatched plates: one ball inside each level plate, centered on the
    extreme phase nodes among those where the ball fits in the box."""
    g = fld.grid
    mesh = g.meshgrid()
    fits = np.ones(g.dims, dtype=bool)
    for ax in range(g.ndim):
        fits &= (mesh[ax] >= g.lo[ax] + radius) & (mesh[ax] <= g.hi[ax] - radius)
    if not fits.any():
        raise CliError(EXIT_ADMISSIBILITY,
                       f"plate radius {radius} does not fit in the box")
    vals = np.where(fits, fld.values, np.nan)
    c_lo = np.unravel_index(np.nanargmin(vals), g.dims)
    c_hi = np.unravel_index(np.nanargmax(vals), g.dims)

    def ball(center_idx) -> np.ndarray:
        dist_sq = np.zeros(g.dims)
        for ax in range(g.ndim):
            dist_sq += (mesh[ax] - mesh[ax][center_idx]) ** 2
        return dist_sq <= radius * radius

    zero, one = ball(c_lo), ball(c_hi)
    if float(fld.values[zero].max()) > a or float(fld.values[one].min()) < b:
        raise CliError(EXIT_ADMISSIBILITY,
                       "ball plates are not contained in the level plates")
    try:
        return ConstraintSet(zero_mask=zero, one_mask=one)
    except ValueError as exc:
        raise CliError(EXIT_ADMISSIBILITY, str(exc))


def cmd_fullcap(settings: Settings) -> int:
    model = settings.get("model", "planar")
    p = _get_p(settings)
    a, b = _levels_pair(settings, model)
    fld = _build_field(settings, model)
    adm = check_admissible_levels(fld, a, b)
    if not (adm.e_nonempty and adm.f_nonempty):
        dump_json(sys.stderr, adm.as_dict())
        raise CliError(EXIT_ADMISSIBILITY, "a plate is empty at these levels")
    opts = _solver_options(settings, p)
    n_levels = settings.get("levels", 256, int)
    plates = settings.get("plates", "levels")
    outer = settings.get("outer", None, float)
    if outer is None and model == "radial" and not adm.boundary_inside:
        # superlevel set meets the box boundary: truncate the outer plate
        outer = b + 0.2
    out = settings.get("out")
    if plates == "levels":
        try:
            report = compare_bound(fld, a, b, opts, levels=n_levels,
                                   outer=outer)
        except ComparisonViolationError as exc:
            if exc.report is None or exc.report.converged:
                raise CliError(1, str(exc))
            # an unconverged iterate proves nothing about the bound;
            # report it and signal non-convergence instead
            report = exc.report
        except ValueError as exc:
            raise CliError(EXIT_ADMISSIBILITY, str(exc))
    elif plates == "balls":
        radius = settings.get("plate_radius", 0.1, float)
        constraints = _ball_constraints(fld, a, b, radius)
        try:
            table = weight_table(fld, p, np.linspace(a, b, n_levels))
            red = reduced_capacity(table, a, b).capacity
        except ValueError as exc:
            raise CliError(EXIT_ADMISSIBILITY, str(exc))
        base = p_capacity(fld.grid, constraints, opts, phase=fld, levels=(a, b))
        tol_compare = 1e-6 + 2.0 * opts.tol_rel
        report = CapacityReport(
            p=base.p, capacity_full=base.capacity_full,
            iterations=base.iterations, converged=base.converged,
            tol=base.tol, grid=base.grid,
            final_decrease=base.final_decrease, minimizer=base.minimizer,
            capacity_reduced=red, gap=red - base.capacity_full,
            bound_ok=bool(base.capacity_full <= red + tol_compare))
    else:
        raise CliError(EXIT_USAGE, f"unknown --plates mode: {plates}")
    if out is None:
        save_capacity_json(report, sys.stdout)
    else:
        save_capacity_json(report, out)
    if settings.get("plot", False, bool):
        from .plots import plot_field

        plot_field(report.minimizer, _plot_stem(out, "minimizer.png"))
    if not report.converged:
        raise CliError(EXIT_NONCONVERGENCE,
                       f"solver did not converge in {report.iterations} "
                       f"iterations")
    return EXIT_OK


def cmd_classify(settings: Settings) -> int:
    model = settings.get("model", "monomial")
    p = _get_p(settings)
    t0 = settings.get("t0", None, float)
    delta = settings.get("delta", None, float)
    from_table = (model == "file"
                  and not _sniff_field_file(settings.get("input") or ""))
    if from_table:
        path = settings.get("input")
        if path is None:
            raise CliError(EXIT_USAGE, "--model file requires --in PATH")
        try:
            table = load_weight_csv(path, p)
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_ADMISSIBILITY, f"cannot load weight table: {exc}")
        if t0 is None:
            t0 = float(table.t[0])
        if delta is None:
            delta = float(table.t[-1]) - t0
        window = (t0, t0 + delta)
    else:
        if t0 is None:
            t0 = 0.0
        if delta is None:
            delta = 0.2
        fld = _build_field(settings, model,
                           grid_override=_CLASSIFY_GRID.get(model))
        rows = settings.get("fit_rows", 8, int)
        if rows < 8:
            raise CliError(EXIT_USAGE, "--fit-rows must be at least 8")
        levels = t0 + delta * 2.0 ** -np.arange(rows - 1, -1, -1, dtype=float)
        try:
            table = weight_table(fld, p, levels)
        except ValueError as exc:
            raise CliError(EXIT_ADMISSIBILITY, str(exc))
        # t0 itself cannot be tabulated, so the resistance window snaps to
        # the innermost extracted level
        window = (float(table.t[0]), float(table.t[-1]))
    try:
        fit_a = fit_exponent(table, t0, delta, column="A")
        fit_s = fit_exponent(table, t0, delta, column="S")
        nu = max(0.0, fit_s.slope)
        alpha = (fit_a.slope - nu) / (p - 1.0)
        if -1e-6 < alpha < 0.0:
            alpha = 0.0
        lr = resistance(table, window[0], window[1])
        report = classify(alpha, nu, p, local_resistance_value=lr,
                          t0=t0, delta=delta)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    out = settings.get("out")
    if out is None:
        save_regime_json(report, sys.stdout)
    else:
        save_regime_json(report, out)
    if settings.get("plot", False, bool):
        from .plots import plot_fit

        plot_fit(fit_a, table, _plot_stem(out, "fit.png"))
    return EXIT_OK


def cmd_defect(settings: Settings) -> int:
    model = settings.get("model", "planar")
    p = _get_p(settings)
    if p != 2.0:
        raise CliError(EXIT_USAGE,
                       "defect requires --p 2: the identity is quadratic-only")
    a, b = _levels_pair(settings, model)
    fld = _build_field(settings, model)
    adm = check_admissible_levels(fld, a, b)
    if not (adm.e_nonempty and adm.f_nonempty):
        dump_json(sys.stderr, adm.as_dict())
        raise CliError(EXIT_ADMISSIBILITY, "a plate is empty at these levels")
    opts = _solver_options(settings, p)
    plates = settings.get("plates", "levels")
    outer = settings.get("outer", None, float)
    if outer is None and model == "radial" and not adm.boundary_inside:
        outer = b + 0.2
    if plates == "levels":
        try:
            constraints = ConstraintSet.from_levels(fld, a, b, outer=outer)
        except ValueError as exc:
            raise CliError(EXIT_ADMISSIBILITY, str(exc))
    elif plates == "balls":
        radius = settings.get("plate_radius", 0.1, float)
        constraints = _ball_constraints(fld, a, b, radius)
    else:
        raise CliError(EXIT_USAGE, f"unknown --plates mode: {plates}")
    n_levels = settings.get("levels", 256, int)
    try:
        table = weight_table(fld, p, np.linspace(a, b, n_levels))
        red = reduced_capacity(table, a, b)
    except ValueError as exc:
        raise CliError(EXIT_ADMISSIBILITY, str(exc))
    if red.profile is None:
        raise CliError(EXIT_ADMISSIBILITY,
                       "divergent reduced problem has no fibered competitor")
    u_f = compose_profile(fld, red.profile)
    base = p_capacity(fld.grid, constraints, opts, phase=fld, levels=(a, b))
    pol = polarization_gap(u_f, base.minimizer, constraints)
    split = tangential_decompose(base.minimizer, fld)
    payload = {
        "p": p,
        "capacity_full": base.capacity_full,
        "capacity_reduced": red.capacity,
        "gap": pol.difference,
        "normal_energy": split.normal_energy,
        "tangential_energy": split.tangential_energy,
        "skipped_measure": split.skipped_measure,
        "polarization_residual": pol.residual,
        "converged": base.converged,
        "iterations": base.iterations,
    }
    out = settings.get("out")
    _write_json(payload, out)
    if settings.get("plot", False, bool):
        from .plots import plot_field

        plot_field(base.minimizer, _plot_stem(out, "minimizer.png"))
    if not base.converged:
        raise CliError(EXIT_NONCONVERGENCE,
                       f"solver did not converge in {base.iterations} "
                       f"iterations")
    return EXIT_OK


def cmd_model(settings: Settings) -> int:
    model = settings.get("model", "planar")
    if model == "file":
        raise CliError(EXIT_USAGE, "model prints closed forms; use a named model")
    p = _get_p(settings)
    a, b = _levels_pair(settings, model)
    dims = _parse_dims(settings.get(
        "grid", _model_default(settings, model, "grid")))
    extent = settings.get("extent", _model_default(settings, model, "extent"))
    lo, hi = _parse_extent(extent, len(dims))
    payload: dict = {"model": model, "p": p, "a": a, "b": b}
    try:
        if model == "planar":
            area = 1.0
            for ax in range(1, len(dims)):
                area *= hi[ax] - lo[ax]
            payload["cross_section"] = area
            payload["capacity"] = planar_capacity(area, a, b, p)
        elif model == "radial":
            n = len(dims)
            payload["dimension"] = n
            payload["capacity"] = radial_capacity(n, a, b, p)
            payload["branch"] = "log" if abs(p - n) < 1e-12 else "power"
        else:
            gamma = settings.get(
                "gamma", _model_default(settings, model, "gamma", 2.0), float)
            area = 1.0
            for ax in range(1, len(dims)):
                area *= hi[ax] - lo[ax]
            payload["gamma"] = gamma
            payload["weight_exponent"] = (gamma - 1.0) * (p - 1.0) / gamma
            payload["capacity"] = monomial_capacity(gamma, area, a, b, p)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    _write_json(payload, settings.get("out"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--model", choices=["planar", "radial", "monomial", "file"])
    sp.add_argument("--in", dest="input", metavar="PATH",
                    help="input field (PHASEFIELD v1) or weight CSV")
    sp.add_argument("--p", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--levels", type=int, help="number of tabulated levels")
    sp.add_argument("--grid", metavar="NX[,NY[,NZ]]")
    sp.add_argument("--extent", metavar="LO:HI,...")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--center", metavar="X,Y[,Z]")
    sp.add_argument("--region", metavar="LO..HI,...")
    sp.add_argument("--out", metavar="PATH")
    sp.add_argument("--tol", type=float, help="solver relative tolerance")
    sp.add_argument("--max-iter", type=int, dest="max_iter")
    sp.add_argument("--config", metavar="PATH",
                    help="flat 'key = value' config file")
    sp.add_argument("--plot", action="store_const", const=True, default=None,
                    help="render figures next to the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasecap",
        description="Condenser capacity pipelines organized by a phase field")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("weight", help="tabulate fiber weights over levels")
    _add_common(sp)
    sp.set_defaults(func=cmd_weight)

    sp = sub.add_parser("reduce", help="reduced capacity from a weight table")
    _add_common(sp)
    sp.add_argument("--emit-profile", dest="emit_profile",
                    action="store_const", const=True, default=None,
                    help="write the optimal profile CSV next to --out")
    sp.add_argument("--reparam", choices=["cubic"],
                    help="reparametrize levels before reducing")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("fullcap", help="grid capacity vs the reduced bound")
    _add_common(sp)
    sp.add_argument("--plates", choices=["levels", "balls"])
    sp.add_argument("--plate-radius", dest="plate_radius", type=float)
    sp.add_argument("--outer", type=float,
                    help="truncate the outer plate at this level")
    sp.set_defaults(func=cmd_fullcap)

    sp = sub.add_parser("classify", help="critical-level regime report")
    _add_common(sp)
    sp.add_argument("--t0", type=float, help="critical level")
    sp.add_argument("--delta", type=float, help="fit window size")
    sp.add_argument("--fit-rows", dest="fit_rows", type=int,
                    help="geometric levels in the fit window (>= 8)")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("defect", help="tangential and polarization report")
    _add_common(sp)
    sp.add_argument("--plates", choices=["levels", "balls"])
    sp.add_argument("--plate-radius", dest="plate_radius", type=float)
    sp.add_argument("--outer", type=float)
    sp.set_defaults(func=cmd_defect)

    sp = sub.add_parser("model", help="closed-form values for a named model")
    _add_common(sp)
    sp.set_defaults(func=cmd_model)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        return args.func(settings)
    except CliError as exc:
        print(f"phasecap {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except AssertionError as exc:
        print(f"phasecap {args.command}: consistency check failed: {exc}",
              file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
