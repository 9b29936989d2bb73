"""``ginibre-lab`` command line: CSV curves plus a JSON run manifest.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import json
import math
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path
from typing import Iterable, Sequence

import click
import numpy as np

from . import __version__, bessel_kernel, complex_onepoint, mde_core, montecarlo, real_onepoint
from .errors import GinibreLabError, RegimeError
from .mde_core import ShiftParams

CSV_SCHEMA = "1"
METHODS = ("contour", "saddle", "rescaled", "real")


def fmt(value) -> str:
    """Decimal with 17 significant digits (integers verbatim)."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def render_csv(header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the target directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def emit(ctx: click.Context, outputs: dict[Path | None, str], params: dict, seed: int | None, t0: float) -> None:
    """Write every output (or print the single one to stdout) plus the manifest."""
    if None in outputs:
        click.echo(outputs[None], nl=False)
        return
    for path, text in outputs.items():
        write_atomic(path, text)
    first = next(iter(outputs))
    manifest = {
        "subcommand": ctx.info_name,
        "parameters": params,
        "master_seed": seed,
        "tool_version": __version__,
        "git_describe": git_describe(),
        "csv_schema": CSV_SCHEMA,
        "wall_time_s": time.perf_counter() - t0,
        "outputs": [str(p) for p in outputs],
    }
    write_atomic(manifest_path(first), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def make_grid(lo: float, hi: float, points: int, log: bool) -> np.ndarray:
    if points < 1:
        raise click.BadParameter("must be at least 1", param_hint="--e-points")
    if log and lo <= 0:
        raise click.BadParameter("log grid needs a positive lower end", param_hint="--e-min")
    if hi < lo:
        raise click.BadParameter("must not be below --e-min", param_hint="--e-max")
    if points == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, points) if log else np.linspace(lo, hi, points)


def grid_options(e_min: float, e_max: float, points: int, log: bool):
    def deco(fn):
        fn = click.option("--log-grid/--linear-grid", default=log, show_default=True)(fn)
        fn = click.option("--e-points", type=int, default=points, show_default=True)(fn)
        fn = click.option("--e-max", type=float, default=e_max, show_default=True)(fn)
        fn = click.option("--e-min", type=float, default=e_min, show_default=True)(fn)
        return fn

    return deco


out_option = click.option(
    "--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="CSV path (stdout if omitted)."
)
hints_option = click.option("--gnuplot-hints", is_flag=True, help="Prefix a gnuplot script as comments.")


def hints(enabled: bool, out: Path | None, using: Sequence[str], logscale: bool) -> list[str]:
    if not enabled:
        return []
    name = str(out) if out is not None else "data.csv"
    lines = ["gnuplot: set datafile separator ','", "gnuplot: set key autotitle columnhead"]
    if logscale:
        lines.append("gnuplot: set logscale x")
    plots = ", ".join(f"'{name}' using {u} with lines" for u in using)
    lines.append(f"gnuplot: plot {plots}")
    return lines


def require_n(n: int, minimum: int = 2) -> None:
    if n < minimum:
        raise click.BadParameter(f"must be at least {minimum}", param_hint="--n")


@click.group(name="ginibre-lab")
@click.version_option(__version__)
def main() -> None:
    """Resolvent traces and smallest eigenvalues of shifted Ginibre matrices."""


@main.command()
@click.option("--delta", type=float, required=True, help="1 - |z|^2, below 1.")
@grid_options(1e-3, 8.0, 200, False)
@out_option
@hints_option
@click.pass_context
def density(ctx, delta, e_min, e_max, e_points, log_grid, out, gnuplot_hints):
    """Limiting densities of Y and of its Hermitisation (at sqrt E)."""
    t0 = time.perf_counter()
    if not delta < 1:
        raise click.BadParameter("must be below 1", param_hint="--delta")
    grid = make_grid(e_min, e_max, e_points, log_grid)
    rows = []
    try:
        for E in grid:
            if E <= 0:
                rows.append((E, math.nan, math.nan))
                continue
            rho_y = mde_core.density(E, delta)
            rho_h = mde_core.solve_mde_h(math.sqrt(E), delta).m.imag / math.pi
            rows.append((E, rho_y, max(rho_h, 0.0)))
    except GinibreLabError as exc:
        raise NumericalFailure(str(exc)) from exc
    text = render_csv(("E", "rho_Y", "rho_H"), rows, hints(gnuplot_hints, out, ("1:2", "1:3"), log_grid))
    params = dict(delta=delta, e_min=e_min, e_max=e_max, e_points=e_points, log_grid=log_grid)
    emit(ctx, {out: text}, params, None, t0)


class NumericalFailure(click.ClickException):
    exit_code = 1


def _onepoint_row(method: str, params: ShiftParams, E: float, tol_abs: float, tol_rel: float, side: str):
    if method == "contour":
        res = complex_onepoint.trace_resolvent_complex(params, E, side, abs_tol=tol_abs, rel_tol=tol_rel)
        return res.value, res.abs_err
    if method == "saddle":
        value = complex_onepoint.saddle_asymptotics(params, E)
        return value, abs(value) * complex_onepoint.saddle_error_bound(params, E)
    if method == "rescaled":
        dt = math.sqrt(params.N) * params.delta
        lam = E / complex_onepoint.rescaled_energy(1.0, dt, params.N)
        if complex_onepoint.RESCALED_C < lam <= complex_onepoint.RESCALED_C * (1 + 1e-12):
            lam = complex_onepoint.RESCALED_C  # grid end point lost to rounding
        res = complex_onepoint.rescaled_onepoint(lam, dt, params.N, tol=max(tol_rel, 1e-12))
        return res.value, res.abs_err
    res = real_onepoint.trace_resolvent_real(params, E, rel_tol=tol_rel)
    return res.value, res.abs_err


@main.command()
@click.option("--n", "n", type=int, required=True, help="Matrix size N.")
@click.option("--z-re", type=float, default=1.0, show_default=True)
@click.option("--z-im", type=float, default=0.0, show_default=True)
@click.option("--method", type=click.Choice(METHODS), default="contour", show_default=True)
@click.option(
    "--side",
    type=click.Choice((complex_onepoint.PLUS_I0, complex_onepoint.NEGATIVE_AXIS)),
    default=complex_onepoint.PLUS_I0,
    show_default=True,
    help="Contour method only; the real method always uses the negative axis.",
)
@grid_options(1e-2, 1.0, 3, True)
@click.option("--tol-abs", type=float, default=1e-10, show_default=True)
@click.option("--tol-rel", type=float, default=1e-9, show_default=True)
@out_option
@hints_option
@click.pass_context
def onepoint(ctx, n, z_re, z_im, method, side, e_min, e_max, e_points, log_grid, tol_abs, tol_rel, out, gnuplot_hints):
    """Expected resolvent trace E Tr(Y - w)^{-1} on an energy grid."""
    t0 = time.perf_counter()
    require_n(n, 1 if method in ("saddle", "rescaled") else 2)
    if tol_abs <= 0 or tol_rel <= 0:
        raise click.BadParameter("tolerances must be positive", param_hint="--tol-abs/--tol-rel")
    params = ShiftParams(n, complex(z_re, z_im))
    grid = make_grid(e_min, e_max, e_points, log_grid)
    rows = []
    for E in grid:
        try:
            value, err = _onepoint_row(method, params, float(E), tol_abs, tol_rel, side)
        except RegimeError as exc:
            click.echo(f"warning: row E={fmt(E)} skipped: {exc}", err=True)
            value, err = complex(math.nan, math.nan), math.nan
        except GinibreLabError as exc:
            raise NumericalFailure(f"E={E}: {exc}") from exc
        rows.append((E, value.real, value.imag, err))
    text = render_csv(("E", "Re", "Im", "abs_err"), rows, hints(gnuplot_hints, out, ("1:2", "1:3"), log_grid))
    record = dict(
        n=n, z_re=z_re, z_im=z_im, method=method, side=side, e_min=e_min, e_max=e_max,
        e_points=e_points, log_grid=log_grid, tol_abs=tol_abs, tol_rel=tol_rel,
    )
    emit(ctx, {out: text}, record, None, t0)


@main.command()
@click.option("--n", "n", type=int, required=True, help="Matrix size N.")
@click.option("--z-re", type=float, default=0.0, show_default=True)
@click.option("--z-im", type=float, default=0.0, show_default=True)
@click.option("--symmetry", type=click.Choice((montecarlo.REAL, montecarlo.COMPLEX)), default="complex", show_default=True)
@click.option("--samples", type=int, default=5000, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@grid_options(1e-3, 10.0, 41, True)
@out_option
@hints_option
@click.pass_context
def mc(ctx, n, z_re, z_im, symmetry, samples, seed, e_min, e_max, e_points, log_grid, out, gnuplot_hints):
    """Sample lambda_1 and summarise its CDF in rescaled units x = lambda_1 / c(N, z).

    The grid flags set the x grid of the summary.  With ``--out F`` the
    per-sample table goes to F and the summary to ``F.summary.csv``.
    """
    t0 = time.perf_counter()
    require_n(n)
    if samples < 1:
        raise click.BadParameter("must be at least 1", param_hint="--samples")
    spec = montecarlo.EnsembleSpec(n, symmetry, complex(z_re, z_im), samples, seed)
    grid = make_grid(e_min, e_max, e_points, log_grid)
    try:
        draws = montecarlo.sample_lambda1(spec)
    except GinibreLabError as exc:
        raise NumericalFailure(f"sampling failed: {exc}") from exc
    x = montecarlo.rescaled_lambda1(draws, spec.params)
    cdf = montecarlo.EmpiricalCdf(x)
    at_zero = spec.z == 0
    ks = montecarlo.ks_distance(cdf, lambda v: montecarlo.edelman_cdf(v, symmetry)) if at_zero else math.nan
    summary_rows = []
    for v in grid:
        ref = montecarlo.edelman_cdf(v, symmetry) if at_zero and v >= 0 else math.nan
        try:
            bound = montecarlo.corollary_bound(v, spec.params, symmetry)
        except GinibreLabError:
            bound = math.nan
        summary_rows.append((v, cdf(v), ref, bound, ks))
    per_sample = render_csv(
        ("sample_index", "lambda1", "seed"), ((s.sample_index, s.lambda1, s.seed) for s in draws)
    )
    summary = render_csv(
        ("x", "empirical_cdf", "reference_cdf", "corollary_bound", "ks"),
        summary_rows,
        hints(gnuplot_hints, out, ("1:2", "1:3"), log_grid),
    )
    record = dict(
        n=n, z_re=z_re, z_im=z_im, symmetry=symmetry, samples=samples,
        e_min=e_min, e_max=e_max, e_points=e_points, log_grid=log_grid,
    )
    if out is None:
        emit(ctx, {None: summary}, record, seed, t0)
    else:
        emit(ctx, {out: per_sample, out.with_name(out.name + ".summary.csv"): summary}, record, seed, t0)
    if at_zero:
        click.echo(f"ks_distance={fmt(ks)}", err=True)


@main.command()
@grid_options(0.1, 10.0, 25, True)
@click.option("--tol-rel", type=float, default=1e-10, show_default=True)
@out_option
@hints_option
@click.pass_context
def besselcheck(ctx, e_min, e_max, e_points, log_grid, tol_rel, out, gnuplot_hints):
    """Compare the kernel diagonal K(l, l) with Im q0(l) / pi on a lambda grid."""
    t0 = time.perf_counter()
    if e_min <= 0:
        raise click.BadParameter("lambda must be positive", param_hint="--e-min")
    if tol_rel <= 0:
        raise click.BadParameter("must be positive", param_hint="--tol-rel")
    grid = make_grid(e_min, e_max, e_points, log_grid)
    rows = []
    for lam in grid:
        try:
            k = bessel_kernel.limiting_kernel(lam, lam, tol=tol_rel)
            q = bessel_kernel.q0(lam, tol=tol_rel * 1e-2).imag / math.pi
            rel = abs(k - q) / abs(k)
        except GinibreLabError as exc:
            click.echo(f"warning: lambda={fmt(lam)}: {exc}", err=True)
            k = q = rel = math.nan
        rows.append((lam, k, q, rel))
    text = render_csv(
        ("lambda", "K_diag", "Im_q0_over_pi", "rel_diff"), rows, hints(gnuplot_hints, out, ("1:2", "1:3"), log_grid)
    )
    record = dict(e_min=e_min, e_max=e_max, e_points=e_points, log_grid=log_grid, tol_rel=tol_rel)
    emit(ctx, {out: text}, record, None, t0)
    finite = [r[3] for r in rows if not math.isnan(r[3])]
    click.echo(f"max_rel_diff={fmt(max(finite)) if finite else 'nan'}", err=True)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
