"""Command-line interface.

Results go to standard output or the requested files; diagnostics go to
standard error. Exit codes: 0 success, 2 parse/validation error, 3 solver
precondition failure, 4 convergence failure, 5 acceptance-check failure.
"""
from __future__ import annotations

import csv
import io as _io
import logging
import math
import os
from pathlib import Path
import sys

import click
import numpy as np

from . import io as rio
from .errors import RTKError, ValidationError

EXIT_CHECK_FAILED = 5


def _fail(exc: RTKError) -> None:
    click.echo(f"error [{exc.code}]: {exc}", err=True)
    sys.exit(exc.exit_code)


def _write(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror}", field="output") from None


def _emit(obj, output: str | None) -> None:
    data = rio.dumps_obj(obj)
    if output:
        _write(output, data)
    else:
        click.echo(data.decode("utf-8"), nl=False)


def _tensor_report(t) -> dict:
    return rio.tensor_to_obj(t)


def _default_seed(doc_seed: int | None) -> int:
    env = os.environ.get("RTK_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"RTK_SEED must be an integer, got {env!r}", field="RTK_SEED") from None
    return 0 if doc_seed is None else doc_seed


def _history_csv(history) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("iteration", "residual", "log10_residual"))
    for k, r in enumerate(history):
        w.writerow((k, repr(float(r)), repr(math.log10(r)) if r > 0 else "-inf"))
    return buf.getvalue()


def _parse_index(text: str | None, default):
    if text is None:
        return default
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"index must be comma-separated integers, got {text!r}", field="index") from None


def parse_deltas(spec: str) -> tuple[float, ...]:
    """``example1`` (1e-8 * j, j = 1..99), ``a,b,c`` or ``start:stop:count`` (linear)."""
    from .perturb import EXAMPLE1_DELTAS

    spec = spec.strip()
    try:
        if spec == "example1":
            return EXAMPLE1_DELTAS
        if ":" in spec:
            start, stop, count = spec.split(":")
            return tuple(float(x) for x in np.linspace(float(start), float(stop), int(count)))
        out = tuple(float(x) for x in spec.split(","))
    except ValueError:
        raise ValidationError(f"cannot parse deltas {spec!r}", field="deltas") from None
    if not out or any(not math.isfinite(d) or d < 0 for d in out):
        raise ValidationError(f"deltas must be finite and non-negative: {spec!r}", field="deltas")
    return out


class RtkGroup(click.Group):
    """Maps package errors to exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except RTKError as exc:
            _fail(exc)


@click.group(cls=RtkGroup)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to standard error.")
def main(verbose: bool):
    """Riccati tensor equations, multilinear control and perturbation analysis."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


# solve ---------------------------------------------------------------------

@main.group()
def solve():
    """Solve Riccati, Lyapunov and Sylvester tensor equations."""


def _arte_report_obj(rep) -> dict:
    return {
        "method": rep.method,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "residual": rep.residual,
        "residual_history": [float(r) for r in rep.residual_history],
        "inner_iterations": [int(k) for k in rep.inner_iterations],
        "closed_loop_eigenvalues": rio.complex_pairs(rep.closed_loop_eigenvalues),
        "closed_loop_stable": bool(np.all(rep.closed_loop_eigenvalues.real < 0)),
        "psd_certificate": rep.psd_certificate,
        "E": _tensor_report(rep.E),
    }


@solve.command("arte")
@click.option("--input", "input_", required=True, type=click.Path(dir_okay=False), help="Problem document.")
@click.option("--method", type=click.Choice(["newton", "schur"]), default=None)
@click.option("--eps", type=float, default=None, help="Outer residual tolerance (default 1e-8).")
@click.option("--inner", type=click.Choice(["bicg-tensor", "bicg-vec", "direct"]), default=None)
@click.option("--inner-tol", type=float, default=None, help="Absolute inner residual tolerance (default 1e-4).")
@click.option("--max-iter", type=int, default=None)
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Report JSON (default stdout).")
@click.option("--history", type=click.Path(dir_okay=False), default=None,
              help="Residual-history CSV (default: next to --output).")
def solve_arte(input_, method, eps, inner, inner_tol, max_iter, output, history):
    """Solve A^H*E + E*A - E*G*E + K = O."""
    from .equations import arte_schur_solve, newton_arte

    doc = rio.parse(input_)
    problem = doc.arte_problem()
    opts = doc.options
    method = method or opts.get("method", "newton")
    if method not in ("newton", "schur"):
        raise ValidationError(f"options.method must be newton or schur, got {method!r}", field="options.method")
    if method == "schur":
        rep = arte_schur_solve(problem)
    else:
        inner = inner or opts.get("inner")
        if inner is not None and inner not in ("bicg-tensor", "bicg-vec", "direct"):
            raise ValidationError(f"options.inner {inner!r} is not a known inner method", field="options.inner")
        rep = newton_arte(
            problem,
            doc.get("E0"),
            inner=inner,
            eps=eps if eps is not None else opts.get("eps", 1e-8),
            inner_tol=inner_tol if inner_tol is not None else opts.get("inner_tol", 1e-4),
            max_iter=max_iter if max_iter is not None else opts.get("max_iter", 50),
        )
    _emit(_arte_report_obj(rep), output)
    if history is None and output is not None:
        history = str(Path(output).with_suffix("")) + "_history.csv"
    if history is not None:
        _write(history, _history_csv(rep.residual_history).encode())
    click.echo(f"{rep.method}: {rep.iterations} iterations, residual {rep.residual:.4e}", err=True)


@solve.command("lyap")
@click.option("--input", "input_", required=True, type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(["direct", "bicg-tensor", "bicg-vec"]), default=None)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def solve_lyap(input_, method, output):
    """Solve A^H*E + E*A + Q = O."""
    from .equations import lyapunov_residual, lyapunov_solve
    from .tensor import frobenius_norm

    doc = rio.parse(input_)
    doc._expect("lyapunov")
    method = method or doc.options.get("method", "direct")
    if method not in ("direct", "bicg-tensor", "bicg-vec"):
        raise ValidationError(f"options.method {method!r} is not a Lyapunov method", field="options.method")
    a, q = doc.get("A"), doc.get("Q")
    info: dict = {}
    e = lyapunov_solve(a, q, method, tol=doc.options.get("eps", 1e-10), info=info)
    res = frobenius_norm(lyapunov_residual(a, q, e))
    _emit({"method": method, "iterations": info.get("iterations", 0), "residual": res, "E": _tensor_report(e)},
          output)


@solve.command("sylv")
@click.option("--input", "input_", required=True, type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(["direct", "bicg"]), default=None)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def solve_sylv(input_, method, output):
    """Solve A*E + E*B = K."""
    from .equations import sylvester_solve
    from .tensor import einstein_product, frobenius_norm

    doc = rio.parse(input_)
    doc._expect("sylvester")
    method = method or doc.options.get("method", "direct")
    if method not in ("direct", "bicg"):
        raise ValidationError(f"options.method {method!r} is not a Sylvester method", field="options.method")
    a, b, k = doc.get("A"), doc.get("B"), doc.get("K")
    e = sylvester_solve(a, b, k, method, tol=doc.options.get("eps", 1e-10))
    res = frobenius_norm(einstein_product(a, e) + einstein_product(e, b) - k)
    _emit({"method": method, "residual": res, "E": _tensor_report(e)}, output)


# analyze -------------------------------------------------------------------

@main.group()
def analyze():
    """H-infinity norm, bounded real lemma and perturbation analysis."""


def _system(doc, closed_loop: bool):
    from .control import MltiSystem
    from .equations import arte_schur_solve

    sys_ = doc.system()
    if not closed_loop:
        return sys_
    problem = doc.arte_problem() if doc.kind == "arte" else None
    if problem is None:
        from .equations import ArteProblem

        problem = ArteProblem.from_factors(sys_.A, sys_.B, sys_.C)
    e = arte_schur_solve(problem, check_preconditions=True).E
    return MltiSystem(problem.closed_loop(e), sys_.B, sys_.C, sys_.D)


@analyze.command("hinf")
@click.option("--input", "input_", required=True, type=click.Path(dir_okay=False))
@click.option("--rel-tol", type=float, default=None, help="Relative bisection tolerance (default 1e-4).")
@click.option("--closed-loop", is_flag=True, help="Use the LQR closed loop (A - G*E, B, C).")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def analyze_hinf(input_, rel_tol, closed_loop, output):
    """H-infinity norm by Hamiltonian bisection."""
    from .control import hinf_norm

    doc = rio.parse(input_)
    rel_tol = rel_tol if rel_tol is not None else doc.options.get("rel_tol", 1e-4)
    res = hinf_norm(_system(doc, closed_loop), rel_tol=rel_tol, detail=True)
    _emit({
        "hinf": res.norm,
        "lower": res.lower,
        "upper": res.upper,
        "rel_tol": rel_tol,
        "closed_loop": closed_loop,
        "trials": [{"gamma": g, "upper_bound": ok, "omegas": [float(w) for w in om]} for g, ok, om in res.trials],
    }, output)


@analyze.command("brl")
@click.option("--input", "input_", required=True, type=click.Path(dir_okay=False))
@click.option("--gamma", type=float, default=None, required=False)
@click.option("--closed-loop", is_flag=True, help="Use the LQR closed loop (A - G*E, B, C).")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def analyze_brl(input_, gamma, closed_loop, output):
    """Evaluate the three bounded-real conditions at gamma."""
    from .control import bounded_real_check

    doc = rio.parse(input_)
    if gamma is None:
        gamma = doc.options.get("gamma")
    if gamma is None or not gamma > 0:
        raise ValidationError("--gamma must be a positive number", field="gamma")
    v = bounded_real_check(_system(doc, closed_loop), gamma)
    _emit({
        "gamma": v.gamma,
        "hinf": v.hinf,
        "norm_below_gamma": v.cond_i,
        "hamiltonian_axis_free": v.cond_ii,
        "riccati_solvable": v.cond_iii,
        "consistent": v.consistent,
        "notes": v.notes,
        "E": None if v.E is None else _tensor_report(v.E),
    }, output)
    if not v.consistent:
        click.echo("warning: bounded-real conditions disagree", err=True)


@analyze.command("perturb")
@click.option("--input", "input_", required=True, type=click.Path(dir_okay=False))
@click.option("--deltas", default="example1", show_default=True,
              help="'example1', a comma list, or start:stop:count.")
@click.option("--trials", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=None, help="Base seed (default: RTK_SEED, options.seed, or 0).")
@click.option("--real-da/--complex-da", default=True, show_default=True,
              help="Use the sharper bound for real perturbations of A.")
@click.option("--g-index", default=None, help="1-based interleaved index of the perturbed G entry.")
@click.option("--k-index", default=None, help="1-based interleaved index of the perturbed K entry.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None, help="Per-sample CSV.")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def analyze_perturb(input_, deltas, trials, seed, real_da, g_index, k_index, csv_path, output):
    """Condition-number bounds and randomized perturbation runs."""
    from .equations import arte_schur_solve, newton_arte
    from .perturb import PerturbConfig, random_perturbation_suite

    doc = rio.parse(input_)
    problem = doc.arte_problem()
    if trials < 0:
        raise ValidationError("--trials must be non-negative", field="trials")
    seed = seed if seed is not None else _default_seed(doc.options.get("seed"))
    base = PerturbConfig()
    config = PerturbConfig(
        real_delta_A=real_da,
        delta_scales=parse_deltas(deltas),
        g_index=_parse_index(g_index, base.g_index),
        k_index=_parse_index(k_index, base.k_index),
    )
    e = arte_schur_solve(problem).E
    e = newton_arte(problem, e, inner="direct", eps=1e-12, warn_unstable=False).E
    rep = random_perturbation_suite(problem, e, config, trials=trials, seed=seed)
    if csv_path:
        _write(csv_path, rep.to_csv().encode())
    failed = [s for s in rep.samples if s.error is not None]
    ratio = max((s.rel_error / min(rep.kappa1 * s.delta1, rep.kappa2 * s.delta2, rep.kappa3 * s.delta3)
                 for s in rep.samples if s.error is None and s.delta > 0), default=0.0)
    _emit({
        "kappa_upper": [rep.kappa1, rep.kappa2, rep.kappa3],
        "eta_c": rep.eta_c,
        "bound_first_order_max": rep.bound_first_order,
        "seed": seed,
        "real_delta_A": real_da,
        "samples": len(rep.samples),
        "failed_samples": len(failed),
        "max_error_to_bound": ratio,
    }, output)
    for s in failed:
        click.echo(f"warning: delta {s.delta:g} trial {s.trial}: {s.error}", err=True)


# spectrum ------------------------------------------------------------------

@main.command()
@click.option("--input", "input_", required=True, type=click.Path(dir_okay=False))
@click.option("--closed-loop", is_flag=True, help="Spectrum of A - G*E for the stabilizing Riccati solution.")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def spectrum(input_, closed_loop, output):
    """U-eigenvalues of A and a stability verdict."""
    from .equations import arte_schur_solve
    from .spectral import u_eigenvalues

    doc = rio.parse(input_)
    a = doc.get("A")
    if closed_loop:
        problem = doc.arte_problem()
        a = problem.closed_loop(arte_schur_solve(problem).E)
    lam = u_eigenvalues(a)
    _emit({
        "tensor": "A - G*E" if closed_loop else "A",
        "eigenvalues": rio.complex_pairs(lam),
        "max_real_part": float(lam.real.max()),
        "stable": bool(np.all(lam.real < 0)),
    }, output)


# demo ----------------------------------------------------------------------

@main.group()
def demo():
    """Built-in worked examples."""


@demo.command("example1")
@click.option("--check", is_flag=True, help="Run every acceptance check; exit 5 on failure.")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Write report JSON and residual-history CSV here.")
def demo_example1(check, output_dir):
    """Example 1 from the published initial tensor E0."""
    from . import checks
    from . import examples as ex
    from .equations import newton_arte
    from .perturb import PerturbConfig, condition_numbers

    problem, rep, elapsed = checks.solve_example1()
    click.echo(f"Newton ({ex.NEWTON_OPTIONS['inner']}, inner tol {ex.NEWTON_OPTIONS['inner_tol']:g}): "
               f"{rep.iterations} iterations in {elapsed:.3f} s")
    for k, r in enumerate(rep.residual_history):
        click.echo(f"  step {k:2d}  residual {r:.4e}")
    for a, b in ((1, 1), (2, 1), (1, 2), (2, 2)):
        click.echo(f"E[:, :, {a}, {b}] =")
        for row in ex.slice_of(rep.E, a, b).real:
            click.echo("  " + "  ".join(f"{v:9.4f}" for v in row))
    lam = rep.closed_loop_eigenvalues
    click.echo("closed-loop U-eigenvalues: " + ", ".join(f"{z.real:.4f}{z.imag:+.4f}i" for z in lam))
    click.echo(f"smallest U-eigenvalue of E: {rep.psd_certificate:.6f}")
    tight = newton_arte(problem, rep.E, inner="direct", eps=1e-12).E
    kap = condition_numbers(problem, tight, PerturbConfig())
    click.echo(f"kappa upper bounds: {kap.kappa1:.4f} {kap.kappa2:.4f} {kap.kappa3:.4f}")
    if output_dir:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "example1_report.json").write_bytes(rio.dumps_obj(_arte_report_obj(rep)))
        (out / "example1_history.csv").write_text(_history_csv(rep.residual_history))
    if check:
        results = checks.run_all(lambda c: click.echo(c.line()))
        failed = [c for c in results if not c.passed]
        click.echo(f"{len(results) - len(failed)}/{len(results)} checks passed")
        if failed:
            sys.exit(EXIT_CHECK_FAILED)


if __name__ == "__main__":  # pragma: no cover
    main()
