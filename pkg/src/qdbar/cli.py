"""Batch command-line front end.

Subcommands: ``validate``, ``index``, ``residuals``, ``compactness`` and
``decompose``, each driven by a JSON run configuration.  Reports are
written as JSON (schema version 1, deterministic except for the timestamp
field) plus a summary CSV for index sweeps.

Exit codes: 0 success, 1 property violation, 2 usage or config error.
"""

from __future__ import annotations

import csv
import datetime
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import click
import numpy as np

from .aps import (
    APSParams,
    OracleCache,
    case_id,
    compactness_evidence,
    index_report,
    mode_assembly,
    oracle_index_agreement,
    residuals,
)
from .errors import ConfigParseError, QdbarError
from .hilbert import ModeLadder
from .weights import (
    DomainKind,
    eval_weights,
    family_from_config,
    trace_S,
    validate_conditions,
)

DEFAULT_TOLERANCES = {
    "identity": 1e-10,
    "residual": 1e-8,
    "norm_bound": 1e-8,
}


@dataclass
class RunConfig:
    family_cfg: dict
    domain: DomainKind
    k_max: int
    m_max: int = 16
    seed: int = 0
    oracle: bool = False
    oracle_windows: Tuple[int, ...] = (40, 80)
    trials: int = 10
    n_max: int = 12
    disk_grid: Optional[Tuple[int, int]] = None
    annulus_grid: Optional[Tuple[int, int, int, int]] = None
    decompose_N: Optional[int] = None
    decompose_M: Optional[int] = None
    out_dir: str = "qdbar_out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def grid(self) -> List[APSParams]:
        if self.domain is DomainKind.DISK:
            if self.disk_grid is None:
                raise ConfigParseError("disk runs need a nonempty 'n_grid'")
            lo, hi = self.disk_grid
            if hi < lo:
                raise ConfigParseError("empty disk grid")
            return [APSParams(self.domain, N) for N in range(lo, hi + 1)]
        if self.annulus_grid is None:
            raise ConfigParseError("annulus runs need a nonempty 'mn_grid'")
        mlo, mhi, nlo, nhi = self.annulus_grid
        if mhi < mlo or nhi < nlo:
            raise ConfigParseError("empty annulus grid")
        return [
            APSParams(self.domain, N, M)
            for M in range(mlo, mhi + 1)
            for N in range(nlo, nhi + 1)
        ]


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParseError(f"cannot parse config {path}: {exc}") from exc
    try:
        domain = DomainKind(raw["domain"])
        cfg = RunConfig(
            family_cfg=raw["family"],
            domain=domain,
            k_max=int(raw["k_max"]),
            m_max=int(raw.get("m_max", 16)),
            seed=int(raw.get("seed", 0)),
            oracle=bool(raw.get("oracle", False)),
            oracle_windows=tuple(raw.get("oracle_windows", (40, 80))),
            trials=int(raw.get("trials", 10)),
            n_max=int(raw.get("n_max", 12)),
            out_dir=str(raw.get("out", "qdbar_out")),
        )
        if "n_grid" in raw:
            cfg.disk_grid = (int(raw["n_grid"]["lo"]), int(raw["n_grid"]["hi"]))
        if "mn_grid" in raw:
            g = raw["mn_grid"]
            cfg.annulus_grid = (
                int(g["m_lo"]), int(g["m_hi"]), int(g["n_lo"]), int(g["n_hi"])
            )
        if "decompose" in raw:
            cfg.decompose_N = int(raw["decompose"]["N"])
            cfg.decompose_M = (
                int(raw["decompose"]["M"]) if "M" in raw["decompose"] else None
            )
        cfg.tolerances.update(raw.get("tolerances", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParseError(f"invalid config field: {exc}") from exc
    if cfg.k_max < 4 * cfg.m_max:
        raise ConfigParseError(
            f"k_max={cfg.k_max} below the adequacy heuristic 4*m_max={4 * cfg.m_max}"
        )
    return cfg


def _write_json(out_dir: Path, name: str, payload: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload["schema"] = 1
    payload["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(out_dir / name, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _build(cfg: RunConfig):
    family = family_from_config(cfg.family_cfg)
    ws = eval_weights(family, cfg.domain, cfg.k_max)
    return family, ws


@click.group()
def main():
    """Weighted-shift domain toolkit: validation, index sweeps, residuals."""


def _config_option(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path())(fn)
    fn = click.option("--out", "out_override", default=None, type=click.Path())(fn)
    return fn


def _run(fn):
    """Shared command wrapper mapping library errors to exit codes."""

    def wrapper(config_path, out_override, **kw):
        try:
            cfg = load_config(config_path)
            if out_override:
                cfg.out_dir = out_override
            code = fn(cfg, **kw)
        except ConfigParseError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except QdbarError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        sys.exit(code)

    wrapper.__name__ = fn.__name__
    return wrapper


@main.command()
@_config_option
@_run
def validate(cfg: RunConfig) -> int:
    """Check the weight conditions for the configured family."""
    family, ws = _build(cfg)
    report = validate_conditions(ws)
    payload = {
        "family": family.key,
        "domain": cfg.domain.value,
        "k_max": cfg.k_max,
        "report": report.to_dict(),
        "trace": trace_S(ws) if report.all_passed else None,
    }
    _write_json(Path(cfg.out_dir), "validate.json", payload)
    for check in report.to_dict()["checks"]:
        status = "pass" if check["passed"] else f"FAIL at k={check['witness']}"
        click.echo(f"{check['condition']}: {status}")
    return 0 if report.all_passed else 1


@main.command()
@_config_option
@click.option("--oracle", "oracle_flag", is_flag=True, default=False)
@_run
def index(cfg: RunConfig, oracle_flag: bool) -> int:
    """Index sweep over the configured cutoff grid."""
    family, ws = _build(cfg)
    ladder = ModeLadder(ws, cfg.m_max)
    use_oracle = cfg.oracle or oracle_flag
    caches = (
        [OracleCache(family, cfg.domain, w) for w in cfg.oracle_windows]
        if use_oracle
        else []
    )
    rows = []
    reports = []
    all_ok = True
    for params in cfg.grid():
        rep = index_report(ladder, params)
        if caches:
            rep.oracle_agreement = all(
                oracle_index_agreement(params, cache) for cache in caches
            )
        reports.append(rep.to_dict())
        ok = rep.agrees
        all_ok = all_ok and ok
        rows.append(
            [
                cfg.domain.value,
                "" if params.M is None else params.M,
                params.N,
                rep.analytic_index,
                rep.total_index,
                "" if rep.oracle_agreement is None else rep.oracle_agreement,
                ok,
            ]
        )
        click.echo(
            f"{cfg.domain.value} M={params.M} N={params.N} [{rep.case}]: "
            f"index {rep.total_index} (analytic {rep.analytic_index}) "
            f"{'ok' if ok else 'MISMATCH'}"
        )
    out_dir = Path(cfg.out_dir)
    _write_json(out_dir, "index.json", {"points": reports})
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "M", "N", "analytic", "computed", "oracle", "agree"])
        writer.writerows(rows)
    return 0 if all_ok else 1


@main.command()
@_config_option
@_run
def residuals_cmd(cfg: RunConfig) -> int:
    """Parametrix residual sweep at the configured grid."""
    _, ws = _build(cfg)
    ladder = ModeLadder(ws, cfg.m_max)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tolerances["residual"]
    worst = 0.0
    points = []
    for params in cfg.grid():
        qd, dq = residuals(ladder, params, cfg.trials, rng)
        worst = max(worst, qd, dq)
        points.append(
            {"M": params.M, "N": params.N, "case": case_id(params),
             "residual_qd": qd, "residual_dq": dq}
        )
        click.echo(
            f"M={params.M} N={params.N}: qd={qd:.3e} dq={dq:.3e} (tol {tol:.1e})"
        )
    _write_json(Path(cfg.out_dir), "residuals.json", {"points": points, "max": worst})
    return 0 if worst <= tol else 1


main.add_command(residuals_cmd, name="residuals")


@main.command()
@_config_option
@_run
def compactness(cfg: RunConfig) -> int:
    """Mode-block norm decay against the certified bound."""
    _, ws = _build(cfg)
    ladder = ModeLadder(ws, min(cfg.m_max, cfg.n_max))
    tol = cfg.tolerances["norm_bound"]
    rows = compactness_evidence(ladder, min(cfg.n_max, ladder.m_max))
    ok = True
    for n, bound, measured in rows:
        good = measured <= bound + tol
        ok = ok and good
        click.echo(f"mode {n}: measured {measured:.6f} <= bound {bound:.6f}: {good}")
    monotone = all(rows[i][1] > rows[i + 1][1] for i in range(len(rows) - 1))
    click.echo(f"bound monotone decreasing: {monotone}")
    _write_json(
        Path(cfg.out_dir),
        "compactness.json",
        {"rows": [{"mode": n, "bound": b, "measured": m} for n, b, m in rows],
         "monotone": monotone},
    )
    return 0 if ok and monotone else 1


@main.command()
@_config_option
@_run
def decompose(cfg: RunConfig) -> int:
    """Print the per-mode variant layout for one cutoff choice."""
    if cfg.decompose_N is None:
        raise ConfigParseError("decompose needs a 'decompose' block with N (and M)")
    if cfg.domain is DomainKind.ANNULUS and cfg.decompose_M is None:
        raise ConfigParseError("annulus decompose needs M")
    params = APSParams(
        cfg.domain,
        cfg.decompose_N,
        cfg.decompose_M if cfg.domain is DomainKind.ANNULUS else None,
    )
    rows = mode_assembly(params, cfg.m_max)
    click.echo(f"case {case_id(params)} (N={params.N}, M={params.M})")
    for r in rows:
        tag = "+" if r.side == "holo" else "-"
        click.echo(
            f"  {r.side:<5} mode {tag}{r.mode}: operator {r.variant.value:<10} "
            f"adjoint {r.adjoint_variant.value:<10} ker {r.dim_ker} coker {r.dim_coker}"
        )
    _write_json(
        Path(cfg.out_dir),
        "decompose.json",
        {
            "case": case_id(params),
            "N": params.N,
            "M": params.M,
            "modes": [
                {"side": r.side, "mode": r.mode, "variant": r.variant.value,
                 "adjoint": r.adjoint_variant.value, "ker": r.dim_ker, "coker": r.dim_coker}
                for r in rows
            ],
        },
    )
    return 0


if __name__ == "__main__":
    main()
