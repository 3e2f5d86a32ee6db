"""Command-line front end: every subcommand writes a CSV headed by a '#' run manifest.

Exit codes: 0 success (NoRoot sentinel rows included), 1 numeric failure, 2 bad arguments
or parameters outside a in (0,1), b > 1 - a.
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

import click

from . import __version__
from .core import Params
from .csvio import CurveResult, RunManifest, fmt, parse_grid, read_config, write
from .errors import ModelError, NoRoot, OutOfRange
from .lyapunov import (critical_bracket, gamma, tail_exponent_series,
                       tail_exponent_spectral)
from .moments import brute_force_moments, cassini_h1, cassini_expectation, mean_x, second_moment_x
from .montecarlo import (SimConfig, hill_estimator, lyapunov_mc, set_threads, simulate_w,
                         tail_constant_estimate)
from .spectral import lambda_detail

SEED_ENV = "RANDFIB_SEED"
ORACLE_MAX_N = 16


class Grid(click.ParamType):
    """'start:stop:step' (inclusive) or a comma list."""

    name = "grid"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            grid = parse_grid(str(value))
        except ValueError as exc:
            self.fail(str(exc), param, ctx)
        if not grid:
            self.fail("empty grid", param, ctx)
        return grid


GRID = Grid()


def _unit_grid(grid, name="--eps-grid"):
    bad = [e for e in grid if not 0.0 <= e <= 1.0]
    if bad:
        raise click.BadParameter(f"values {bad} outside [0,1]", param_hint=name)
    return grid


class Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except OutOfRange as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(2)
        except (ModelError, ArithmeticError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            ctx.exit(1)


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        cfg = read_config(value)
    except (OSError, ValueError) as exc:
        raise click.BadParameter(str(exc), ctx=ctx, param=param)
    # the same key=value pairs are offered to every subcommand; unknown keys are ignored
    ctx.default_map = {name: dict(cfg) for name in main.commands}
    return value


def _emit(result: CurveResult, command: str, seed=None, out=None):
    ctx = click.get_current_context()
    flags = dict(ctx.params)
    flags.update({k: v for k, v in (ctx.parent.params if ctx.parent else {}).items()
                  if k not in ("config",)})
    text = write(result, RunManifest(command, flags, seed), out)
    if out is None or str(out) == "-":
        click.echo(text, nl=False)


def _params(a, b, eps=0.0) -> Params:
    return Params(a, b, eps)


common_ab = [
    click.option("--a", "a", type=float, required=True, help="coefficient a in (0,1)"),
    click.option("--b", "b", type=float, required=True, help="coefficient b > 1 - a"),
]
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None,
                          help="output CSV path (default: stdout)")


def with_ab(fn):
    for opt in reversed(common_ab):
        fn = opt(fn)
    return fn


@click.group(cls=Cli, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(exists=True, dir_okay=False), callback=_load_config,
              is_eager=True, expose_value=True, help="key=value file; command-line flags win")
@click.option("--threads", type=int, default=None, help="worker threads for simulations")
@click.version_option(__version__, prog_name="randfib")
def main(config, threads):
    """Exact and simulated characteristics of X_{n+1} = a X_n + b eta_{n-1} X_{n-1}."""
    set_threads(threads)


@main.command("gamma-curve")
@with_ab
@click.option("--eps-grid", type=GRID, default="0:1:0.05", show_default=True)
@click.option("--tol", type=float, default=1e-13, show_default=True)
@click.option("--check", is_flag=True, help="fail unless gamma strictly decreases along the grid")
@out_option
def gamma_curve(a, b, eps_grid, tol, check, out):
    """Lyapunov exponent gamma(eps) with its truncation bound."""
    p = _params(a, b)
    res = CurveResult(["eps", "gamma", "tail_bound"])
    for e in _unit_grid(eps_grid):
        g = gamma(p.with_eps(e), tol)
        res.add(e, g.gamma, g.tail_bound)
    if check:
        vals = res.column("gamma")
        bad = [eps_grid[i + 1] for i in range(len(vals) - 1) if not vals[i + 1] < vals[i]]
        if bad:
            click.echo(f"error: gamma not strictly decreasing at eps={bad}", err=True)
            sys.exit(1)
    _emit(res, "gamma-curve", out=out)


@main.command("critical-eps")
@with_ab
@click.option("--tol", type=float, default=1e-10, show_default=True)
@out_option
def critical_eps(a, b, tol, out):
    """eps* with gamma(eps*) = 0; prints eps* then the CSV row (bracket included)."""
    _params(a, b)
    lo, hi = critical_bracket(a, b, tol)
    star = 0.5 * (lo + hi)
    click.echo(fmt(star))
    res = CurveResult(["a", "b", "eps_star", "bracket_lo", "bracket_hi"])
    res.add(a, b, star, lo, hi)
    _emit(res, "critical-eps", out=out)


@main.command("lambda-curve")
@with_ab
@click.option("--eps-grid", type=GRID, required=True)
@click.option("--t-grid", type=GRID, default="0:4:0.5", show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@out_option
def lambda_curve(a, b, eps_grid, t_grid, tol, out):
    """Lambda_eps(t) from the truncated tilted ratio-chain kernel."""
    p = _params(a, b)
    if any(t < 0 for t in t_grid):
        raise click.BadParameter("t must be >= 0", param_hint="--t-grid")
    res = CurveResult(["eps", "t", "lambda", "K_used", "residual"])
    for e in _unit_grid(eps_grid):
        for t in t_grid:
            v = lambda_detail(p.with_eps(e), t, tol)
            res.add(e, t, v.value, v.K, v.residual)
    _emit(res, "lambda-curve", out=out)


@main.command("tail-curve")
@with_ab
@click.option("--eps-grid", type=GRID, required=True)
@click.option("--tol", type=float, default=1e-12, show_default=True)
@click.option("--mc", is_flag=True, help="add Hill estimates from simulated W samples")
@click.option("--mc-n", type=int, default=20_000, show_default=True)
@click.option("--mc-m", type=int, default=10_000, show_default=True)
@click.option("--hill-k", type=int, default=None, help="order statistics used (default m^0.6)")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, envvar=SEED_ENV,
              show_default=True, help=f"RNG seed (env {SEED_ENV})")
@out_option
def tail_curve(a, b, eps_grid, tol, mc, mc_n, mc_m, hill_k, seed, out):
    """Tail exponent s_eps by the scalar series and the spectral root, side by side.

    Points with gamma(eps) <= 0 get a NoRoot sentinel row; eps = 0 gets s = inf.
    """
    p = _params(a, b)
    res = CurveResult(["eps", "s_series", "s_spectral", "abs_diff", "hill_s", "hill_se"])
    for e in _unit_grid(eps_grid):
        q = p.with_eps(e)
        if e == 0.0:
            res.add(e, math.inf, math.inf, 0.0, "", "")
            continue
        try:
            s1 = tail_exponent_series(q, tol).s
            s2 = tail_exponent_spectral(q, tol).s
        except NoRoot:
            click.echo(f"warning: eps={fmt(e)} is at or above eps*; NoRoot row emitted", err=True)
            res.add(e, "NoRoot", "NoRoot", "", "", "")
            continue
        hs, hse = "", ""
        if mc:
            h = hill_estimator(simulate_w(SimConfig(q, mc_n, mc_m, seed)), hill_k)
            hs, hse = h.s, h.stderr
        res.add(e, s1, s2, abs(s1 - s2), hs, hse)
    _emit(res, "tail-curve", seed=seed if mc else None, out=out)


@main.command("moments")
@with_ab
@click.option("--eps", type=float, required=True)
@click.option("--N", "n", type=click.IntRange(0), required=True, help="largest index n")
@out_option
def moments(a, b, eps, n, out):
    """E[X_n], E[X_n^2] and E[X_n X_{n+2} - X_{n+1}^2], with enumeration for n <= 16."""
    p = _params(a, b, eps)
    res = CurveResult(["n", "mean", "second", "cassini", "oracle_mean", "oracle_second",
                       "rel_err"])
    n_max = n
    for n in range(n_max + 1):
        mean, second = mean_x(p, n), second_moment_x(p, n)
        cass = cassini_h1(p) if n == 0 else cassini_expectation(p, n)
        if n <= ORACLE_MAX_N:
            bf = brute_force_moments(p, n, ks=())
            err = max(abs(mean - bf.mean) / abs(bf.mean), abs(second - bf.second) / abs(bf.second))
            res.add(n, mean, second, cass, bf.mean, bf.second, err)
        else:
            res.add(n, mean, second, cass, "", "", "")
    _emit(res, "moments", out=out)


@main.command("simulate")
@with_ab
@click.option("--eps", type=float, required=True)
@click.option("--n", "n", type=click.IntRange(2), default=20_000, show_default=True)
@click.option("--m", "m", type=click.IntRange(1), default=10_000, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, envvar=SEED_ENV,
              show_default=True, help=f"RNG seed (env {SEED_ENV})")
@click.option("--initial", type=(float, float), multiple=True,
              help="initial pair X0 X1 (repeatable; default 1 a)")
@click.option("--hill-k", type=int, default=None, help="order statistics used (default m^0.6)")
@click.option("--dump", type=click.Path(dir_okay=False), default=None,
              help="write the W_n samples, one per line")
@out_option
def simulate(a, b, eps, n, m, seed, initial, hill_k, dump, out):
    """Monte Carlo summary: gamma estimate, Hill tail index and tail constant of W_n."""
    p = _params(a, b, eps)
    pairs = list(initial) or [(1.0, a)]
    try:
        s_exact = tail_exponent_series(p).s
    except NoRoot:
        s_exact = None
    res = CurveResult(["eps", "n", "m", "seed", "gamma_hat", "gamma_se", "s_hill", "s_hill_se",
                       "K_hat", "x0", "x1"])
    for i, (x0, x1) in enumerate(pairs):
        try:
            cfg = SimConfig(p, n, m, seed, (x0, x1))
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--initial")
        g, g_se = lyapunov_mc(cfg)
        w = simulate_w(cfg)
        s_hill = s_se = k_hat = math.nan
        if m > 2:
            try:
                h = hill_estimator(w, hill_k)
                s_hill, s_se = h.s, h.stderr
            except ModelError:
                pass
        if s_exact is not None and m >= 500:
            k_hat = tail_constant_estimate(w, s_exact).pooled
        res.add(eps, n, m, seed, g, g_se, s_hill, s_se, k_hat, x0, x1)
        if dump:
            path = Path(dump)
            if len(pairs) > 1:
                path = path.with_name(f"{path.stem}.{i}{path.suffix}")
            path.write_text("".join(fmt(float(v)) + "\n" for v in w.values))
    _emit(res, "simulate", seed=seed, out=out)


@main.command("verify")
@click.option("--scale", type=click.Choice(["quick", "full"]), default="quick", show_default=True)
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, envvar=SEED_ENV,
              show_default=True, help=f"RNG seed (env {SEED_ENV})")
@out_option
def verify_cmd(scale, seed, out):
    """Run the invariant suite; exit 1 if any check fails."""
    from .verify import run

    res = run(scale, seed)
    _emit(res, "verify", seed=seed, out=out)
    failed = [r[0] for r in res.rows if not r[3]]
    if failed:
        click.echo(f"failed checks: {', '.join(failed)}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
