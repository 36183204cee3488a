"""Command-line front end.

Every command writes plot-ready data (CSV rows or a JSON document) to
``--out`` or stdout.  Errors are reported as one JSON line on stderr:
exit status 2 for invalid configurations, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .compare import CELL_COLUMNS, COMPONENT_COLUMNS, compare_components, compare_histogram
from .errors import ConfigError, DegenerateGeometryError, DomainError, NumericalError
from .fpt import FPT_COLUMNS, FptSpec, estimate_fpt
from .geometry import support
from .law import GRID_COLUMNS, MotionParams, evaluate_points, interior_density_general, singular_masses
from .sim import HistogramSpec, run_ensemble

COMMANDS = ("simulate", "density", "masses", "compare", "fpt", "limiting")
FORMATS = ("csv", "json")
METHODS = ("closed", "series")
MASS_COLUMNS = ("series", "lambda1", "lambda2", "lambda3", "lambda4", "t", "eta1", "eta2", "eta3", "interior")
LIMIT_COLUMNS = ("x1", "x2", "x3", "t", "xi")

PRESETS = {
    # eta1 for lambda1 = 1, 2, 10
    "fig3a": dict(command="masses", t=10.0, grid="201", sweep=((1, 1, 1, 1), (2, 1, 1, 1), (10, 1, 1, 1))),
    # eta2 for (lambda1, lambda2) = (1, 2), (2, 4), (5, 10)
    "fig3b": dict(command="masses", t=10.0, grid="201", sweep=((1, 2, 1, 1), (2, 4, 1, 1), (5, 10, 1, 1))),
    # eta3 for equal intensities 1, 5, 10
    "fig3c": dict(command="masses", t=10.0, grid="201", sweep=((1, 1, 1, 1), (5, 5, 5, 5), (10, 10, 10, 10))),
    "fig4l": dict(command="density", c=1.0, t=1.0, grid="slice:0.5:101"),
    "fig4r": dict(command="density", c=1.0, t=2.0, grid="slice:1:101"),
    "fig5l": dict(command="limiting", c=1.0, t=1.0, grid="slice:0.5:101"),
    "fig5r": dict(command="limiting", c=1.0, t=2.0, grid="slice:1:101"),
}


@dataclass(frozen=True)
class GridSpec:
    kind: str  # "box" or "slice"
    counts: tuple
    x1: float | None = None

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        try:
            if text.startswith("slice:"):
                _, x1, n = text.split(":")
                return cls("slice", (int(n), int(n)), float(x1))
            parts = [int(p) for p in text.split(",")]
        except ValueError:
            raise ConfigError(f"cannot parse grid {text!r}") from None
        if len(parts) == 1:
            parts = parts * 3
        if len(parts) != 3:
            raise ConfigError(f"grid needs 1 or 3 counts, got {text!r}")
        if min(parts) < 1:
            raise ConfigError("grid counts must be positive")
        return cls("box", tuple(parts))


@dataclass(frozen=True)
class RunConfig:
    command: str = "masses"
    lambdas: tuple = (1.0, 1.0, 1.0, 1.0)
    c: float = 1.0
    t: float = 1.0
    beta: float | None = None
    n: int = 100_000
    seed: int = 0
    grid: str | None = None
    tol: float = 1e-9
    out: str | None = None
    format: str = "csv"
    method: str = "closed"
    sweep: tuple | None = None
    preset: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if self.sweep is not None:
            object.__setattr__(self, "sweep", tuple(tuple(float(v) for v in row) for row in self.sweep))
        for name in ("c", "t", "tol"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be positive")
            object.__setattr__(self, name, v)
        if self.beta is not None:
            b = float(self.beta)
            if not np.isfinite(b) or b <= 0:
                raise ConfigError("beta must be positive")
            object.__setattr__(self, "beta", b)
        if int(self.n) < 1:
            raise ConfigError("n must be at least 1")
        if int(self.workers) < 1:
            raise ConfigError("workers must be at least 1")
        if self.grid is not None:
            GridSpec.parse(self.grid)
        for lam in (self.sweep or ()) + (self.lambdas,):
            if len(lam) != 4:
                raise ConfigError("four intensities are required")
            MotionParams.regular(lam, self.c)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        if self.sweep is not None:
            d["sweep"] = [list(row) for row in self.sweep]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "lambdas" in d:
            d["lambdas"] = tuple(d["lambdas"])
        if d.get("sweep") is not None:
            d["sweep"] = tuple(tuple(r) for r in d["sweep"])
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def motion_params(self, lambdas=None) -> MotionParams:
        return MotionParams.regular(self.lambdas if lambdas is None else lambdas, self.c)


# --- output ----------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _table(columns, rows) -> dict:
    return {"columns": list(columns), "rows": [list(r) for r in rows]}


# --- grids -----------------------------------------------------------------


def grid_points(cfg: RunConfig, mp: MotionParams, default: str = "25"):
    spec = GridSpec.parse(cfg.grid or default)
    lo, hi = support(mp.ds, cfg.t).bounding_box()
    if spec.kind == "slice":
        if not lo[0] < spec.x1 < hi[0]:
            raise ConfigError(f"slice x1 = {spec.x1} is outside ({lo[0]:.17g}, {hi[0]:.17g})")
        n2, n3 = spec.counts
        y, z = np.meshgrid(np.linspace(lo[1], hi[1], n2), np.linspace(lo[2], hi[2], n3), indexing="ij")
        return np.column_stack([np.full(y.size, spec.x1), y.ravel(), z.ravel()])
    axes = [np.linspace(lo[d], hi[d], spec.counts[d]) for d in range(3)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


# --- commands --------------------------------------------------------------


def cmd_masses(cfg: RunConfig):
    spec = GridSpec.parse(cfg.grid or "101")
    n_t = spec.counts[0]
    ts = np.linspace(0.0, cfg.t, n_t) if n_t > 1 else np.array([cfg.t])
    rows = []
    for s, lam in enumerate(cfg.sweep or (cfg.lambdas,)):
        mp = cfg.motion_params(lam)
        for t in ts:
            m = singular_masses(mp, t)
            rows.append((s, *lam, t, m.eta1, m.eta2, m.eta3, m.interior_mass))
    return MASS_COLUMNS, rows, None


def cmd_density(cfg: RunConfig):
    mp = cfg.motion_params()
    pts = grid_points(cfg, mp)
    rows = evaluate_points(mp, pts, cfg.t)
    if cfg.method == "series":
        out = []
        for r in rows:
            ev = interior_density_general(mp, r[:3], cfg.t, tol=cfg.tol)
            out.append((*r[:4], *ev.p, ev.total, r[-1]))
        rows = np.array(out).reshape(-1, len(GRID_COLUMNS))
    return GRID_COLUMNS, rows, None


def cmd_limiting(cfg: RunConfig):
    mp = cfg.motion_params()
    rows = evaluate_points(mp, grid_points(cfg, mp), cfg.t)
    return LIMIT_COLUMNS, rows[:, [0, 1, 2, 3, -1]], None


def _histogram_spec(cfg: RunConfig, default=None):
    text = cfg.grid or default
    if not text:
        return None
    spec = GridSpec.parse(text)
    if spec.kind != "box":
        raise ConfigError("histograms need a box grid")
    return HistogramSpec(spec.counts)


def cmd_simulate(cfg: RunConfig):
    mp = cfg.motion_params()
    res = run_ensemble(mp, cfg.t, int(cfg.n), int(cfg.seed), _histogram_spec(cfg), workers=int(cfg.workers))
    summary = res.summary()
    if res.histogram is None:
        rows = [(k, v, v / res.n) for k, v in res.component_counts.items()]
        columns = ("component", "count", "frequency")
    else:
        e = res.edges
        prob = res.cell_probabilities()
        se = res.cell_standard_errors()
        rows = []
        for idx in np.ndindex(res.histogram.shape):
            cen = [0.5 * (e[d][idx[d]] + e[d][idx[d] + 1]) for d in range(3)]
            rows.append((*idx, *cen, int(res.histogram[idx]), prob[idx], se[idx]))
        columns = ("i", "j", "k", "x1", "x2", "x3", "count", "probability", "se")
        summary["histogram"] = res.histogram
        summary["edges"] = e
    return columns, rows, summary


def cmd_compare(cfg: RunConfig):
    mp = cfg.motion_params()
    res = run_ensemble(mp, cfg.t, int(cfg.n), int(cfg.seed), _histogram_spec(cfg, "12"), workers=int(cfg.workers))
    cells = compare_histogram(mp, res)
    comps = compare_components(mp, res)
    summary = {
        "t": cfg.t,
        "n": res.n,
        "seed": res.seed,
        "components": [dict(zip(COMPONENT_COLUMNS, r)) for r in comps],
        "cells": {
            "count": int(len(cells.z)),
            "fraction_within_3sigma": cells.fraction_within(3.0),
            "max_abs_z": float(np.max(np.abs(cells.z))) if len(cells.z) else 0.0,
            "rows": _table(CELL_COLUMNS, cells.rows()),
        },
    }
    return CELL_COLUMNS, list(cells.rows()), summary


def cmd_fpt(cfg: RunConfig):
    if cfg.beta is None:
        raise ConfigError("fpt needs --beta")
    spec = FptSpec(cfg.beta, cfg.motion_params())
    est = estimate_fpt(spec, cfg.t, int(cfg.n), int(cfg.seed))
    rows = zip(est.hitting_times, est.n_switches, est.is_atom)
    return FPT_COLUMNS, rows, est.summary()


HANDLERS = {
    "simulate": cmd_simulate,
    "density": cmd_density,
    "masses": cmd_masses,
    "compare": cmd_compare,
    "fpt": cmd_fpt,
    "limiting": cmd_limiting,
}


def run(cfg: RunConfig) -> str:
    """Execute ``cfg`` and return the rendered output text."""
    columns, rows, summary = HANDLERS[cfg.command](cfg)
    if cfg.format == "csv":
        return to_csv(columns, rows)
    doc = {"command": cfg.command, "config": cfg.to_dict()}
    if summary is not None:
        doc["summary"] = summary
    if cfg.command in ("masses", "density", "limiting"):
        doc["data"] = _table(columns, rows)
    return to_json(doc)


# --- argument handling -----------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gcpmotion", description="Cyclic random motion in R^3 driven by geometric counting processes.")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="JSON run configuration (flags override it)")
    p.add_argument("--save-config", help="write the resolved configuration to this path")
    for j in range(1, 5):
        p.add_argument(f"--lambda{j}", type=float, help=f"intensity of the GCP for direction {j}")
    p.add_argument("--c", type=float, help="speed")
    p.add_argument("--t", type=float, help="time (horizon for fpt, upper end of the sweep for masses)")
    p.add_argument("--beta", type=float, help="barrier for fpt")
    p.add_argument("--n", type=int, help="number of simulated paths")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", help="N | N1,N2,N3 | slice:X1:N (masses: number of time points)")
    p.add_argument("--tol", type=float)
    p.add_argument("--method", choices=METHODS, help="density evaluator")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=FORMATS)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.preset:
        base.update(PRESETS[args.preset], preset=args.preset)
    if args.config:
        try:
            with open(args.config) as fh:
                base.update(RunConfig.loads(fh.read()).to_dict())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    cfg = RunConfig.from_dict(base)
    lam = list(cfg.lambdas)
    for j in range(4):
        v = getattr(args, f"lambda{j + 1}")
        if v is not None:
            lam[j] = v
    over = {
        k: getattr(args, k)
        for k in ("command", "c", "t", "beta", "n", "seed", "grid", "tol", "method", "workers", "out", "format")
        if getattr(args, k) is not None
    }
    return replace(cfg, lambdas=tuple(lam), **over)


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "exit": code, "message": " ".join(str(exc).split())}
    achieved = getattr(exc, "achieved", None)
    if achieved is not None:
        payload["achieved"] = float(achieved)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        if args.save_config:
            with open(args.save_config, "w") as fh:
                fh.write(cfg.dumps())
        text = run(cfg)
        if cfg.out:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except NumericalError as exc:
        return _fail(exc, 3)
    except (ConfigError, DomainError, DegenerateGeometryError, ValueError, OSError) as exc:
        return _fail(exc, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
