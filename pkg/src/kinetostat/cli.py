"""Command-line interface.

    kinetostat validate    --model PATH
    kinetostat stiffness   --model PATH --point X,Y,Z [--deflection ...]
    kinetostat equilibrium --model PATH --point X,Y,Z [--deflection ...]
    kinetostat map         --model PATH --grid XMIN:XMAX:NX,... --quantity ...

All lengths are mm, forces N, moments N*mm, angles rad. Exit codes:
0 success, 1 usage error, 2 invalid model, 3 solver failure.
KINETOSTAT_THREADS caps the map command's worker threads.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from .chain import ChainState
from .config import GridSpec, ModelConfig, load_model
from .errors import (
    BucklingError,
    EquilibriumError,
    KinetostatError,
    ModelConfigError,
    OutOfWorkspaceError,
    SingularEquilibriumError,
)
from .geometry import Deflection, Transform, apply_deflection
from .statics import (
    StiffnessMatrix,
    aggregate_stiffness,
    chain_stiffness_loaded,
    solve_equilibrium,
)

EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_SOLVER = 3

UNITS = {"length": "mm", "force": "N", "moment": "N*mm", "angle": "rad"}

PAPER_SCALE_TRANSLATIONAL = 1.0e4  # table compliance in 1e-4 mm/N
PAPER_SCALE_ROTATIONAL = 1.0e7  # table compliance in 1e-7 rad/(N*mm)


class SolverFailure(KinetostatError):
    """Raised by commands when equilibrium or kinematics cannot be solved."""


def _norm_float(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0.0 else x  # fold -0.0 into 0.0 for stable emission


def _norm(obj):
    if isinstance(obj, (list, tuple)):
        return [_norm(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _norm(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return _norm_float(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _norm(v) for k, v in obj.items()}
    return obj


def _parse_vector(text: str, n: int, what: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != n:
        raise click.UsageError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise click.UsageError(f"{what} is not numeric: {text!r}") from None


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _fmt_matrix(m, indent="  "):
    return "\n".join(
        indent + " ".join(f"{_norm_float(v):+.15e}" for v in row) for row in m
    )


def _solve_at(cfg: ModelConfig, point, deflection):
    """Equilibrium of every chain at point (+) deflection.

    Returns (chains, states, unloaded pose). Raises SolverFailure with
    per-chain diagnostics when any chain fails.
    """
    try:
        chains, nominals, pose = cfg.instantiate(point)
    except OutOfWorkspaceError as exc:
        raise SolverFailure(f"point out of workspace: {exc}") from exc
    target = apply_deflection(pose, Deflection.from_array(deflection))
    states = []
    for ch, nom in zip(chains, nominals):
        states.append(solve_equilibrium(
            ch, target, ChainState(nom, np.zeros(ch.n_virtual)), cfg.solver))
    bad = [i for i, s in enumerate(states) if not s.converged]
    if bad:
        detail = "; ".join(
            f"chain {i}: {states[i].iterations} iterations, residuals "
            f"{states[i].residual_translation:.3e} mm / "
            f"{states[i].residual_rotation:.3e} rad / "
            f"{states[i].residual_statics:.3e} N"
            for i in bad
        )
        raise SolverFailure(f"equilibrium failed for chains {bad}: {detail}")
    return chains, states, pose


def _aggregate_loaded(chains, states) -> StiffnessMatrix:
    return aggregate_stiffness(
        [chain_stiffness_loaded(c, s) for c, s in zip(chains, states)])


def _stiffness_payload(cfg, point, deflection, paper_scale):
    chains, states, _ = _solve_at(cfg, point, deflection)
    k = _aggregate_loaded(chains, states)
    c = k.compliance()
    ct, cr = c[:3, :3], c[3:, 3:]
    if paper_scale:
        ct = ct * PAPER_SCALE_TRANSLATIONAL
        cr = cr * PAPER_SCALE_ROTATIONAL
    total = sum(s.load.as_array() for s in states)
    return {
        "model": cfg.name,
        "point_mm": list(point),
        "deflection": list(deflection),
        "units": UNITS,
        "paper_scale": bool(paper_scale),
        "wrench": total,
        "stiffness": k.values,
        "compliance_translational": ct,
        "compliance_rotational": cr,
        "iterations": [s.iterations for s in states],
    }


def _stiffness_table(payload) -> str:
    scale_t = " x 1e-4" if payload["paper_scale"] else ""
    scale_r = " x 1e-7" if payload["paper_scale"] else ""
    lines = [
        f"model: {payload['model']}",
        "units: mm, N, N*mm, rad",
        "point [mm]: " + " ".join(f"{v:+.15e}" for v in payload["point_mm"]),
        "deflection [mm, rad]: " + " ".join(f"{v:+.15e}" for v in payload["deflection"]),
        "wrench [N, N*mm]: " + " ".join(f"{_norm_float(v):+.15e}" for v in payload["wrench"]),
        f"iterations: {payload['iterations']}",
        "stiffness [N/mm, N/rad; N*mm/mm, N*mm/rad]:",
        _fmt_matrix(payload["stiffness"]),
        f"translational compliance [mm/N{scale_t}]:",
        _fmt_matrix(payload["compliance_translational"]),
        f"rotational compliance [rad/(N*mm){scale_r}]:",
        _fmt_matrix(payload["compliance_rotational"]),
    ]
    return "\n".join(lines) + "\n"


def _json_text(payload) -> str:
    return json.dumps(_norm(payload), indent=2, sort_keys=True) + "\n"


@click.group()
def cli():
    """Stiffness and equilibrium analysis of multi-chain elastic manipulators."""


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(), help="Model file.")
def validate(model_path):
    """Parse a model file and report its structure."""
    cfg = load_model(model_path)
    lines = [f"model: {cfg.name}", f"architecture: {cfg.architecture}", "valid: yes"]
    lines += cfg.describe()
    for name, pt in sorted(cfg.reference_points.items()):
        lines.append(f"reference point {name}: {list(pt)}")
    click.echo("\n".join(lines))


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--point", "point_text", required=True, help="X,Y,Z in mm.")
@click.option("--deflection", "deflection_text", default=None,
              help="DX,DY,DZ,RX,RY,RZ (mm, rad); omit for the unloaded mode.")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
@click.option("--paper-scale", is_flag=True,
              help="Scale compliance blocks by 1e4 (mm/N) and 1e7 (rad/(N*mm)).")
@click.option("--out", "out_path", type=click.Path(), default=None)
def stiffness(model_path, point_text, deflection_text, fmt, paper_scale, out_path):
    """Aggregated 6x6 stiffness at a workspace point (loaded or unloaded)."""
    cfg = load_model(model_path)
    point = _parse_vector(point_text, 3, "--point")
    deflection = np.zeros(6) if deflection_text is None \
        else _parse_vector(deflection_text, 6, "--deflection")
    payload = _stiffness_payload(cfg, point, deflection, paper_scale)
    text = _json_text(payload) if fmt == "json" else _stiffness_table(payload)
    _emit(text, out_path)


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--point", "point_text", required=True, help="X,Y,Z in mm.")
@click.option("--deflection", "deflection_text", default=None,
              help="DX,DY,DZ,RX,RY,RZ (mm, rad).")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="json")
@click.option("--out", "out_path", type=click.Path(), default=None)
def equilibrium(model_path, point_text, deflection_text, fmt, out_path):
    """Total wrench and per-chain equilibrium state at a deflected pose."""
    cfg = load_model(model_path)
    point = _parse_vector(point_text, 3, "--point")
    deflection = np.zeros(6) if deflection_text is None \
        else _parse_vector(deflection_text, 6, "--deflection")
    chains, states, _ = _solve_at(cfg, point, deflection)
    total = sum(s.load.as_array() for s in states)
    payload = {
        "model": cfg.name,
        "point_mm": list(point),
        "deflection": list(deflection),
        "units": UNITS,
        "total_wrench": total,
        "chains": [
            {
                "index": i,
                "converged": s.converged,
                "iterations": s.iterations,
                "q": s.q,
                "theta": s.theta,
                "wrench": s.load.as_array(),
                "residuals": {
                    "translation_mm": s.residual_translation,
                    "rotation_rad": s.residual_rotation,
                    "statics": s.residual_statics,
                },
            }
            for i, s in enumerate(states)
        ],
    }
    if fmt == "json":
        text = _json_text(payload)
    else:
        lines = [f"model: {cfg.name}",
                 "total wrench [N, N*mm]: "
                 + " ".join(f"{_norm_float(v):+.15e}" for v in total)]
        for c in payload["chains"]:
            lines.append(
                f"chain {c['index']}: iterations={c['iterations']} "
                f"wrench=" + " ".join(f"{_norm_float(v):+.15e}" for v in c["wrench"]))
        text = "\n".join(lines) + "\n"
    _emit(text, out_path)


_QUANTITIES = ["min-eig-translational", "max-compliance-entry", "condition-number"]


def _map_value(cfg, point, deflection, quantity):
    chains, states, _ = _solve_at(cfg, point, deflection)
    k = _aggregate_loaded(chains, states).values
    kt = k[:3, :3]
    if quantity == "min-eig-translational":
        return float(np.linalg.eigvalsh(kt).min())
    if quantity == "max-compliance-entry":
        c = np.linalg.inv(k)
        return float(np.abs(c[:3, :3]).max())
    eig = np.linalg.eigvalsh(kt)
    return float(eig.max() / eig.min()) if eig.min() > 0 else float("inf")


@cli.command("map")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--grid", "grid_text", required=True,
              help="XMIN:XMAX:NX,YMIN:YMAX:NY,ZMIN:ZMAX:NZ (mm).")
@click.option("--quantity", type=click.Choice(_QUANTITIES), default="min-eig-translational")
@click.option("--deflection", "deflection_text", default=None,
              help="Evaluate the loaded stiffness at this deflection.")
@click.option("--out", "out_path", type=click.Path(), default=None)
def map_cmd(model_path, grid_text, quantity, deflection_text, out_path):
    """Scalar stiffness map over a workspace grid, one CSV row per point.

    Unreachable or non-converged points emit nan and are counted in a
    summary on stderr; the exit code stays zero.
    """
    cfg = load_model(model_path)
    try:
        grid = GridSpec.parse(grid_text)
    except KinetostatError as exc:
        raise click.UsageError(str(exc)) from None
    deflection = np.zeros(6) if deflection_text is None \
        else _parse_vector(deflection_text, 6, "--deflection")

    points = list(grid.points())

    def evaluate(pt):
        try:
            return _map_value(cfg, pt, deflection, quantity)
        except (SolverFailure, OutOfWorkspaceError, EquilibriumError,
                SingularEquilibriumError, BucklingError):
            return float("nan")

    threads = int(os.environ.get("KINETOSTAT_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(evaluate, points))
    else:
        values = [evaluate(pt) for pt in points]

    rows = ["x_mm,y_mm,z_mm,value"]
    failures = 0
    for pt, v in zip(points, values):
        if np.isnan(v):
            failures += 1
        val = "nan" if np.isnan(v) else repr(_norm_float(v))
        rows.append(f"{float(pt[0])!r},{float(pt[1])!r},{float(pt[2])!r},{val}")
    _emit("\n".join(rows) + "\n", out_path)
    if failures:
        click.echo(f"warning: {failures} of {len(points)} grid points failed "
                   "(nan rows)", err=True)


def main(argv=None) -> int:
    """Entry point with the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except ModelConfigError as exc:
        click.echo(f"invalid model: {exc}", err=True)
        return EXIT_MODEL
    except (SolverFailure, OutOfWorkspaceError, EquilibriumError,
            SingularEquilibriumError, BucklingError) as exc:
        click.echo(f"solver failure: {exc}", err=True)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
