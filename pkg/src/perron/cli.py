"""Command-line interface: solve, dcurve, power-doeblin, verify.

Each command reads a JSON config describing the kernel, the space, the
certificate strategy, solver tolerances, and output paths.  Outputs are
flat files: a JSON run report and RFC-4180-style CSVs with full float
precision (17 significant digits).  Exit codes: 0 all residuals within
thresholds, 1 config errors, 2 kernel not minorizable (or no power
certificate found), 3 numerical failure.
"""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .change_of_measure import MeasureChange, conjugate_kernel, transform_schur
from .corrected_kernels import build_corrected_kernels, verify_resolvent_identity
from .doeblin import (
    MinorizationCertificate,
    NotMinorizable,
    extract_minorization,
    load_certificate,
    positivity_improving_check,
    rank_one_split,
    verify_certificate,
)
from .errors import (
    BelowSpectralRadiusError,
    DimensionMismatchError,
    NotMinorizableError,
    PerronError,
)
from .expressions import ExpressionError, evaluate
from .kernel_op import (
    Kernel,
    constant_kernel,
    gaussian_kernel,
    kernel_from_csv,
    separable_kernel,
    spectral_radius_oracle,
    tight_schur_bound,
    verify_schur,
)
from .matrix_pf import NotFoundWithin, power_doeblin_analyze
from .measure import GridFunction, make_counting_space, make_interval_space
from .mollified import convergence_study
from .spectral import (
    eigenfunction_series,
    solve,
    verify_dominance,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_MINORIZABLE = 2
EXIT_NUMERICAL = 3

DEFAULT_SEED = 20240808
OUT_ENV = "PERRON_OUT"

THRESHOLDS = {
    "eig_residual": 1e-8,
    "proj_idempotency": 1e-8,
    "left_residual": 1e-8,
    "rank_one_defect": 1e-8,
    "oracle_delta_rel": 1e-7,
    "series_vs_residue": 1e-8,
}


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\r\n".join(lines) + "\r\n")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc


def _build_space(cfg: dict):
    try:
        kind = cfg["kind"]
        if kind == "interval":
            return make_interval_space(
                float(cfg["a"]), float(cfg["b"]), int(cfg["n"]), cfg.get("rule", "midpoint")
            )
        if kind == "counting":
            return make_counting_space(int(cfg["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad space config: {exc}") from exc
    raise ConfigError(f"unknown space kind {kind!r}")


def _build_kernel(cfg: dict, space, config_dir: Path) -> Kernel:
    try:
        family = cfg["family"]
        if family == "constant":
            return constant_kernel(space, float(cfg.get("c", 1.0)))
        if family == "gaussian":
            return gaussian_kernel(space, float(cfg["sigma"]))
        if family == "separable":
            v = evaluate(cfg["v"], space.nodes)
            u = evaluate(cfg["u"], space.nodes)
            return separable_kernel(space, v, u)
        if family == "csv":
            path = Path(cfg["path"])
            if not path.is_absolute():
                path = config_dir / path
            return kernel_from_csv(path, space)
    except (KeyError, TypeError, ValueError, OSError, ExpressionError,
            DimensionMismatchError) as exc:
        raise ConfigError(f"bad kernel config: {exc}") from exc
    raise ConfigError(f"unknown kernel family {family!r}")


def _resolve_certificate(cfg: dict, kernel: Kernel, config_dir: Path):
    cert_cfg = cfg.get("certificate", {"strategy": "row_min"})
    if "path" in cert_cfg:
        path = Path(cert_cfg["path"])
        if not path.is_absolute():
            path = config_dir / path
        try:
            cert = load_certificate(path, kernel.space)
        except (OSError, json.JSONDecodeError, KeyError, ValueError,
                DimensionMismatchError) as exc:
            raise ConfigError(f"cannot load certificate {path}: {exc}") from exc
        return cert
    strategy = cert_cfg.get("strategy", "row_min")
    return extract_minorization(kernel, strategy)


def _out_dir(out_flag) -> Path:
    base = out_flag or os.environ.get(OUT_ENV) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _prepare(config_path: str):
    cfg = _load_config(config_path)
    config_dir = Path(config_path).resolve().parent
    space = _build_space(cfg.get("space", {}))
    kernel = _build_kernel(cfg.get("kernel", {}), space, config_dir)
    return cfg, config_dir, kernel


def _echo_fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


@click.group()
@click.version_option(version=__version__, prog_name="perron")
def main():
    """Dominant spectra of positive kernel operators via rank-one
    minorization and Birman-Schwinger root finding."""


@main.command(name="solve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
@click.option("--out", "out_flag", default=None, help="Output directory (default: $PERRON_OUT or cwd).")
def solve_cmd(config_path, out_flag):
    """Solve for the dominant eigenvalue, eigenfunction, and projection."""
    _solve_impl(config_path, out_flag)


def _solve_impl(config_path, out_flag):
    t_start = time.perf_counter()
    try:
        cfg, config_dir, kernel = _prepare(config_path)
        cert = _resolve_certificate(cfg, kernel, config_dir)
    except ConfigError as exc:
        _echo_fail(EXIT_CONFIG, f"config error: {exc}")
        return
    if isinstance(cert, NotMinorizable):
        _echo_fail(
            EXIT_NOT_MINORIZABLE,
            f"{cert}\nhint: run 'perron power-doeblin --config {config_path}' "
            "to look for a usable power",
        )
        return
    solver_cfg = cfg.get("solver", {})
    tol = float(solver_cfg.get("tol", 1e-12))
    mode = solver_cfg.get("mode", "direct_lu")
    out = _out_dir(out_flag)
    outputs = cfg.get("outputs", {})
    try:
        result = solve(kernel, certificate=cert, tol=tol, solver=mode)
        t_solve = time.perf_counter()
        oracle = spectral_radius_oracle(kernel, tol=1e-12)
        dominance = verify_dominance(kernel, result)
        residuals = {
            "eig_residual": result.diagnostics.eig_residual,
            "proj_idempotency": result.diagnostics.proj_idempotency,
            "left_residual": result.diagnostics.left_residual,
            "rank_one_defect": result.diagnostics.rank_one_defect,
            "bs_at_lambda0": abs(result.diagnostics.bs_at_lambda0),
            "oracle_delta_rel": abs(result.lambda0 - oracle.rho) / result.lambda0,
        }
        # the series route is only meaningful when its geometric ratio is
        # workable; otherwise the residual is omitted, never faked
        ratio = result.evaluator.remainder_radius / result.lambda0
        if ratio < 0.999:
            series = eigenfunction_series(result.evaluator, result.lambda0, tol=1e-12)
            residuals["series_vs_residue"] = float(
                np.max(np.abs(series.values - result.eigenfunction.values))
                / max(1.0, result.eigenfunction.sup_norm())
            )
        failed = {
            name: value
            for name, value in residuals.items()
            if name in THRESHOLDS and value > THRESHOLDS[name]
        }
        report = {
            "config": cfg,
            "certificate": {
                "alpha": result.certificate.alpha,
                "power": result.certificate.power,
                "strict": result.certificate.strict,
            },
            "lambda0": result.lambda0,
            "oracle_rho": oracle.rho,
            "remainder_radius": result.evaluator.remainder_radius,
            "spectral_gap": {
                "second_radius": dominance.second_radius,
                "ratio": dominance.gap_ratio,
                "strictly_dominant": dominance.strictly_dominant,
            },
            "residuals": residuals,
            "thresholds": {k: THRESHOLDS[k] for k in residuals if k in THRESHOLDS},
            "passed": not failed,
            "timings_s": {
                "solve": t_solve - t_start,
                "total": time.perf_counter() - t_start,
            },
        }
        report_path = out / outputs.get("report", "report.json")
        report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        eig_path = out / outputs.get("eigenfunction", "eigenfunction.csv")
        _write_csv(
            eig_path,
            ["index", "node", "weight", "eigenfunction", "left_density"],
            [
                (
                    i,
                    float(kernel.space.nodes[i]),
                    float(kernel.space.weights[i]),
                    float(result.eigenfunction.values[i]),
                    float(result.left_row.density[i]),
                )
                for i in range(kernel.size)
            ],
        )
        if "dcurve" in outputs:
            _write_dcurve(result.evaluator, out / outputs["dcurve"], None, None, 200)
        click.echo(
            f"lambda0 = {result.lambda0:.12g}  (oracle delta "
            f"{residuals['oracle_delta_rel']:.3e}, gap ratio {dominance.gap_ratio:.6g})"
        )
        for name, value in sorted(failed.items()):
            click.echo(
                f"residual over threshold: {name} = {value:.3e} > {THRESHOLDS[name]:.1e}",
                err=True,
            )
        sys.exit(EXIT_OK if not failed else EXIT_NUMERICAL)
    except NotMinorizableError as exc:
        _echo_fail(EXIT_NOT_MINORIZABLE, str(exc))
    except PerronError as exc:
        _echo_fail(EXIT_NUMERICAL, f"numerical failure: {exc}")


def _write_dcurve(evaluator, path: Path, lam_min, lam_max, points):
    rho = evaluator.remainder_radius
    if lam_min is None:
        lam_min = rho * 1.001 + 1e-6 * max(evaluator.operator_norm, 1e-12)
    if lam_max is None:
        lam_max = 2.0 * max(evaluator.operator_norm, lam_min * 1.5)
    if lam_min <= rho:
        raise BelowSpectralRadiusError(lam_min, rho)
    grid = np.geomspace(lam_min, lam_max, points)
    rows = []
    for lam in grid:
        rows.append((float(lam), evaluator.value(lam), evaluator.derivative(lam)))
    _write_csv(path, ["lambda", "D", "D_prime"], rows)
    values = [r[1] for r in rows]
    bracket = None
    for i in range(1, len(values)):
        if values[i - 1] < 0 <= values[i]:
            bracket = (grid[i - 1], grid[i])
            break
    return bracket, values


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--lambda-min", type=float, default=None)
@click.option("--lambda-max", type=float, default=None)
@click.option("--points", type=int, default=200)
@click.option("--out", "out_flag", default=None)
def dcurve(config_path, lambda_min, lambda_max, points, out_flag):
    """Sample the scalar function D and its derivative on a lambda grid."""
    try:
        cfg, config_dir, kernel = _prepare(config_path)
        cert = _resolve_certificate(cfg, kernel, config_dir)
    except ConfigError as exc:
        _echo_fail(EXIT_CONFIG, f"config error: {exc}")
        return
    if isinstance(cert, NotMinorizable):
        _echo_fail(EXIT_NOT_MINORIZABLE, str(cert))
        return
    out = _out_dir(out_flag)
    path = out / cfg.get("outputs", {}).get("dcurve", "dcurve.csv")
    try:
        from .resolvent import BirmanSchwingerEvaluator

        split = rank_one_split(kernel, cert)
        evaluator = BirmanSchwingerEvaluator(split)
        bracket, values = _write_dcurve(evaluator, path, lambda_min, lambda_max, points)
        monotone = bool(np.all(np.diff(values) > 0))
        click.echo(f"wrote {path} ({points} points, monotone={monotone})")
        if bracket:
            click.echo(f"sign change bracketed in [{bracket[0]:.12g}, {bracket[1]:.12g}]")
        else:
            click.echo("no sign change in the sampled range", err=True)
        sys.exit(EXIT_OK)
    except PerronError as exc:
        _echo_fail(EXIT_NUMERICAL, f"numerical failure: {exc}")


@main.command(name="power-doeblin")
@click.option("--config", "config_path", required=True)
@click.option("--n-max", type=int, default=8)
@click.option("--out", "out_flag", default=None)
def power_doeblin(config_path, n_max, out_flag):
    """Search for the smallest power with a strict certificate and
    classify the peripheral spectrum."""
    try:
        cfg, _, kernel = _prepare(config_path)
    except ConfigError as exc:
        _echo_fail(EXIT_CONFIG, f"config error: {exc}")
        return
    if kernel.space.kind != "counting":
        _echo_fail(EXIT_CONFIG, "power-doeblin analysis expects a counting-space matrix")
        return
    try:
        report = power_doeblin_analyze(kernel, n_max=n_max)
    except PerronError as exc:
        _echo_fail(EXIT_NUMERICAL, f"numerical failure: {exc}")
        return
    if isinstance(report, NotFoundWithin):
        _echo_fail(EXIT_NOT_MINORIZABLE, str(report))
        return
    lines = [
        f"power-Doeblin certificate found at N = {report.power}",
        f"spectral radius rho = {report.rho:.12g}",
        f"candidates (N-th roots): "
        + ", ".join(f"{c:.6g}" for c in report.roots_of_unity_candidates),
        f"peripheral eigenvalues: "
        + ", ".join(f"{c:.6g}" for c in report.peripheral_candidates),
        f"dominant eigenvalue of the N-th power simple: {report.simple}",
        f"second modulus: {report.second_modulus:.12g}",
        f"rank-one projection defect: {report.rank_one_defect:.3e}",
    ]
    text = "\n".join(lines)
    click.echo(text)
    out = _out_dir(out_flag)
    (out / cfg.get("outputs", {}).get("report", "power_doeblin.txt")).write_text(text + "\n")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_flag", default=None)
def verify(config_path, out_flag):
    """Run the invariant battery applicable to the configured kernel."""
    try:
        cfg, config_dir, kernel = _prepare(config_path)
    except ConfigError as exc:
        _echo_fail(EXIT_CONFIG, f"config error: {exc}")
        return
    seed = int(cfg.get("seed", DEFAULT_SEED))
    checks = []

    def record(name, passed, detail):
        checks.append((name, bool(passed), detail))
        click.echo(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    try:
        cert = _resolve_certificate(cfg, kernel, config_dir)
        if isinstance(cert, NotMinorizable):
            record("doeblin_minorization_n1", False, f"{cert} (expected for kernels with zeros)")
            if kernel.space.kind != "counting":
                _echo_fail(EXIT_NOT_MINORIZABLE, "no certificate and no power search for interval kernels")
                return
            report = power_doeblin_analyze(kernel)
            if isinstance(report, NotFoundWithin):
                _echo_fail(EXIT_NOT_MINORIZABLE, str(report))
                return
            record(
                "power_doeblin_certificate",
                True,
                f"N = {report.power}, rho = {report.rho:.12g}, "
                f"peripheral = {[f'{c:.6g}' for c in report.peripheral_candidates]}",
            )
            ok = all(p for name, p, _ in checks if name != "doeblin_minorization_n1")
            sys.exit(EXIT_OK if ok else EXIT_NUMERICAL)
            return
        cert_report = verify_certificate(kernel, cert)
        record(
            "certificate_holds",
            cert_report.holds,
            f"worst slack {cert_report.worst_slack:.3e}, strict phi {cert_report.strict_phi}",
        )
        split = rank_one_split(kernel, cert)
        recon = (
            cert.lower_bound_matrix() + split.remainder.entries - kernel.entries
        )
        record(
            "split_reconstruction",
            np.abs(recon).max() <= 1e-12 * max(1.0, kernel.entries.max()),
            f"max defect {np.abs(recon).max():.3e}",
        )
        record(
            "positivity_improving",
            positivity_improving_check(kernel, cert, seed=seed),
            "random nonnegative battery maps to strictly positive images",
        )
        result = solve(kernel, certificate=cert)
        lam = result.lambda0
        record("eig_residual", result.diagnostics.eig_residual <= 1e-8,
               f"{result.diagnostics.eig_residual:.3e}")
        record("proj_idempotency", result.diagnostics.proj_idempotency <= 1e-8,
               f"{result.diagnostics.proj_idempotency:.3e}")
        record("left_residual", result.diagnostics.left_residual <= 1e-8,
               f"{result.diagnostics.left_residual:.3e}")
        oracle = spectral_radius_oracle(kernel, tol=1e-12)
        delta = abs(lam - oracle.rho) / lam
        record("oracle_agreement", delta <= 1e-7, f"relative delta {delta:.3e}")

        ev = result.evaluator
        grid = np.geomspace(max(ev.remainder_radius * 1.0001, lam * 1e-3), 10 * ev.operator_norm, 64)
        grid = grid[grid > ev.remainder_radius]
        dvals = [ev.value(x) for x in grid]
        record("bs_monotone", bool(np.all(np.diff(dvals) > 0)), "64-point geometric scan")
        sign_changes = int(np.sum(np.diff(np.sign(dvals)) != 0))
        record("bs_single_root", sign_changes == 1, f"{sign_changes} sign change(s)")
        for probe in (lam * 1.5, lam * 3.0):
            h = 1e-5 * probe
            fd = (ev.value(probe + h) - ev.value(probe - h)) / (2 * h)
            an = ev.derivative(probe)
            rel = abs(fd - an) / abs(an)
            record(f"bs_derivative_at_{probe:.6g}", rel <= 1e-6, f"fd mismatch {rel:.3e}")

        lam_test = 2.0 * ev.operator_norm
        seq = build_corrected_kernels(split, 6)
        ident = verify_resolvent_identity(seq, lam_test)
        record(
            "kernel_resolvent_identity",
            ident.relative_residual <= 1e-9,
            f"relative residual {ident.relative_residual:.3e} at lambda = {lam_test:.6g}",
        )

        rng = np.random.default_rng(seed)
        h = GridFunction(1.0 + rng.uniform(0.0, 1.0, kernel.size), kernel.space)
        mc = MeasureChange(h, 2.0)
        conj = conjugate_kernel(kernel, mc)
        conj_result = solve(conj, strategy="row_min")
        invariance = abs(conj_result.lambda0 - lam) / lam
        record("measure_change_invariance", invariance <= 1e-8, f"relative delta {invariance:.3e}")
        schur = transform_schur(tight_schur_bound(kernel), mc)
        schur_report = verify_schur(conj, schur)
        record(
            "measure_change_schur",
            schur_report.holds,
            f"row {schur_report.max_row_ratio:.9f}, col {schur_report.max_col_ratio:.9f}",
        )

        if kernel.space.kind == "interval" and kernel.size >= 50:
            span = kernel.space.nodes[-1] - kernel.space.nodes[0]
            mid = 0.5 * (kernel.space.nodes[0] + kernel.space.nodes[-1])
            widths = (0.2 * span, 0.1 * span)
            study = convergence_study(kernel, mid, mid, widths, 3)
            record(
                "mollified_convergence",
                study.errors[1] <= study.errors[0] + 1e-12,
                f"errors {study.errors[0]:.3e} -> {study.errors[1]:.3e}",
            )
        ok = all(p for _, p, _ in checks)
        sys.exit(EXIT_OK if ok else EXIT_NUMERICAL)
    except NotMinorizableError as exc:
        _echo_fail(EXIT_NOT_MINORIZABLE, str(exc))
    except PerronError as exc:
        _echo_fail(EXIT_NUMERICAL, f"numerical failure: {exc}")


if __name__ == "__main__":
    main()
