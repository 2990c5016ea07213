"""Command-line front end.

    eulerspec slices    --p 0,2
    eulerspec spectrum  --p 0,2 --gamma 2,0 --format csv
    eulerspec evolve    --p 0,2 --gamma 2,0 --K 16 --seed 7
    eulerspec resolvent --p 0,2 --gamma 1,0 --a 0.5
    eulerspec report    --run-dir runs

Exit codes: 0 pass, 1 property violation, 2 usage error, 3 numerical
non-convergence.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import click
import numpy as np

from eulerspec import __version__
from eulerspec import io as rio
from eulerspec.coefficients import Controls, ProblemInstance, slice_coefficients
from eulerspec.evolution import StabilityError, spectral_mapping_check
from eulerspec.lattice import LatticeVector, contributing_slices, kappa
from eulerspec.spectra import EigenSolverError, nonimaginary_spectrum, resolvent_report

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3


@dataclass
class RunConfig:
    p: Optional[Tuple[int, int]] = None
    gamma: Tuple[float, float] = (1.0, 0.0)
    N0: int = 64
    N_max: int = 1024
    eig_tol: float = 1e-8
    classify_tol: float = 1e-6
    K: int = 16
    t_final: float = 40.0
    dt: Optional[float] = None
    trials: int = 3
    seed: int = 0
    a: float = 0.5
    tau_max: float = 100.0
    tau_step: float = 5.0
    format: str = "json"
    out: Optional[str] = None
    pretty: bool = False
    run_dir: Optional[str] = None

    @classmethod
    def merged(cls, file_values: dict, flag_values: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(file_values) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values = dict(file_values)
        values.update({k: v for k, v in flag_values.items() if v is not None and k in names})
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.p is None:
            raise ValueError("--p is required")
        self.p = tuple(int(v) for v in self.p)
        self.gamma = tuple(float(v) for v in self.gamma)
        if len(self.p) != 2 or len(self.gamma) != 2:
            raise ValueError("p and gamma take two components")
        if self.p == (0, 0):
            raise ValueError("p must be nonzero")
        if self.N0 < 8:
            raise ValueError("N0 must be >= 8")
        if self.N_max < self.N0:
            raise ValueError("N_max must be >= N0")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.t_final <= 0 or self.tau_step <= 0:
            raise ValueError("t_final and tau_step must be > 0")

    def instance(self) -> ProblemInstance:
        controls = Controls(self.N0, self.N_max, self.eig_tol, self.classify_tol)
        return ProblemInstance(LatticeVector(*self.p), complex(*self.gamma), controls)


def _pair(kind):
    def convert(ctx, param, value):
        if value is None:
            return None
        try:
            parts = [kind(s) for s in value.split(",")]
        except ValueError:
            raise click.BadParameter(f"expected two comma-separated numbers, got {value!r}")
        if len(parts) != 2:
            raise click.BadParameter(f"expected two comma-separated numbers, got {value!r}")
        return tuple(parts)
    return convert


def run_options(f):
    opts = [
        click.option("--config", "config_file", type=click.Path(dir_okay=False, exists=True),
                     help="JSON file with RunConfig defaults; flags override."),
        click.option("--p", "p", callback=_pair(int), help="Steady-state wave vector, e.g. 0,2."),
        click.option("--gamma", callback=_pair(float), help="Circulation as re,im (default 1,0)."),
        click.option("--N0", "N0", type=int),
        click.option("--N-max", "N_max", type=int),
        click.option("--eig-tol", type=float),
        click.option("--classify-tol", type=float),
        click.option("--K", "K", type=int, help="Box half-width for 2D runs."),
        click.option("--t-final", type=float),
        click.option("--dt", type=float),
        click.option("--trials", type=int),
        click.option("--seed", type=int),
        click.option("--a", "a", type=float, help="Re lambda for resolvent samples."),
        click.option("--tau-max", type=float),
        click.option("--tau-step", type=float),
        click.option("--format", "format", type=click.Choice(["json", "csv"])),
        click.option("--out", type=click.Path(dir_okay=False), help="Write here instead of stdout."),
        click.option("--pretty", is_flag=True, default=None),
        click.option("--run-dir", type=click.Path(file_okay=False),
                     help="Also persist <kind>.json here for `report`."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _config(kwargs) -> RunConfig:
    file_values = {}
    path = kwargs.pop("config_file", None)
    if path:
        file_values = json.loads(Path(path).read_text())
    try:
        return RunConfig.merged(file_values, kwargs)
    except (ValueError, TypeError) as exc:
        raise click.UsageError(str(exc))


def _emit(cfg: RunConfig, kind: str, payload: dict, rows) -> None:
    if cfg.format == "csv":
        text = rio.csv_text(rio.CSV_HEADERS[kind], rows)
    else:
        text = rio.dumps(payload, cfg.pretty)
    if cfg.out:
        rio.write_text(Path(cfg.out), text)
    else:
        click.echo(text, nl=False)
    if cfg.run_dir and kind in rio.RESULT_KINDS:
        rio.write_text(Path(cfg.run_dir) / f"{kind}.json", rio.dumps(payload, pretty=True))


@click.group()
@click.version_option(version=__version__)
@click.option("-v", "--verbose", count=True)
def main(verbose: int = 0):
    """Spectrum of the 2D Euler operator linearized at a two-mode steady state."""
    logging.basicConfig(level=logging.WARNING - 10 * verbose, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@run_options
def slices(**kwargs):
    """List the slices meeting the open disk of radius |p|, with kappa and beta."""
    cfg = _config(kwargs)
    inst = cfg.instance()
    entries, rows = [], []
    for s in contributing_slices(inst.p):
        beta = slice_coefficients(inst, s, s.window).beta if inst.gamma != 0 else 0j
        entries.append({"qhat": list(s.qhat), "window": list(s.window), "rank": s.rank,
                        "beta": [beta.real, beta.imag]})
        rows.append((s.qhat.x, s.qhat.y, s.window[0], s.window[1], beta.real, beta.imag))
    payload = {"schema": rio.SCHEMA_VERSION, "kind": "slices", "p": list(inst.p),
               "kappa": kappa(inst.p), "slices": entries}
    _emit(cfg, "slices", payload, rows)
    sys.exit(EXIT_OK)


@main.command()
@run_options
def spectrum(**kwargs):
    """Nonimaginary eigenvalues, the 2*kappa bound and axis symmetry."""
    cfg = _config(kwargs)
    try:
        rep = nonimaginary_spectrum(cfg.instance())
    except EigenSolverError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NONCONVERGED)
    _emit(cfg, "spectrum", rep.to_dict(), rep.csv_rows())
    if not rep.converged:
        click.echo("error: nonimaginary eigenvalues did not converge by N_max", err=True)
        sys.exit(EXIT_NONCONVERGED)
    sys.exit(EXIT_OK if rep.bound_ok and rep.symmetry_ok else EXIT_VIOLATION)


@main.command()
@run_options
def evolve(**kwargs):
    """Evolve random states on the box and compare growth with the spectral abscissa."""
    cfg = _config(kwargs)
    inst = cfg.instance()
    try:
        spec = nonimaginary_spectrum(inst)
        chk = spectral_mapping_check(inst, cfg.K, cfg.trials, cfg.t_final, cfg.dt, cfg.seed,
                                     report=spec)
    except StabilityError as exc:
        raise click.UsageError(str(exc))
    except EigenSolverError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NONCONVERGED)
    _emit(cfg, "evolution", chk.to_dict(), chk.csv_rows())
    if not spec.converged:
        sys.exit(EXIT_NONCONVERGED)
    sys.exit(EXIT_OK if chk.ok else EXIT_VIOLATION)


@main.command()
@run_options
def resolvent(**kwargs):
    """Resolvent norms on the line Re lambda = a of the box operator."""
    cfg = _config(kwargs)
    if cfg.a == 0:
        raise click.UsageError("--a must be nonzero")
    taus = np.arange(0.0, cfg.tau_max + 0.5 * cfg.tau_step, cfg.tau_step)
    rep = resolvent_report(cfg.instance(), cfg.K, cfg.a, [float(t) for t in taus])
    _emit(cfg, "resolvent", rep.to_dict(), rep.csv_rows())
    sys.exit(EXIT_OK if rep.ok else EXIT_VIOLATION)


@main.command()
@click.option("--run-dir", type=click.Path(file_okay=False), default="euler_runs", show_default=True)
def report(run_dir: str):
    """Cross-link saved spectrum, evolution and resolvent runs into one document with figures."""
    from eulerspec.report import build_report

    try:
        results = rio.load_results(Path(run_dir))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if not results:
        raise click.UsageError("nothing to report")
    ok = build_report(results, Path(run_dir))
    click.echo(str(Path(run_dir) / "report.md"))
    sys.exit(EXIT_OK if ok else EXIT_VIOLATION)


if __name__ == "__main__":
    main()
