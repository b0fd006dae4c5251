"""Command-line experiment runner.

Every subcommand writes CSV whose first lines are ``#`` comments carrying the
library version and the full resolved configuration as JSON.  Passing such a
file back through ``--config`` re-runs the same experiment.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .character import character_1d_exact, character_1d_todd, character_exact
from .ensemble import empirical_zero_stats, facet_polytope, tentacle_allowed_fraction
from .momentmap import SolverError, TorusPoint, classify_region, solve_normal_data
from .polytope import (PolytopeError, ehrhart_fit, is_simple, load_polytope,
                       named_polytope)
from .szego import EnumerationGuardError, szego_eval, u_inf
from .zerocurrent import (StencilError, TransitionPointError, bk_volume_check,
                          oracle_psi, psi_density)

__all__ = ["ConfigError", "ExperimentConfig", "main", "run"]

logger = logging.getLogger("polyzeros")

THREADS_ENV = "POLYZEROS_THREADS"

COMMANDS = {
    "polytope": ("info", "ehrhart"),
    "bp": ("grid",),
    "region": ("grid",),
    "szego": ("converge", "mass-grid"),
    "character": ("table", "todd1d"),
    "psi": ("grid", "rank-map", "bk-check"),
    "ensemble": ("m1", "tentacles"),
}


class ConfigError(ValueError):
    """Invalid experiment configuration (exit status 2)."""


class NumericError(RuntimeError):
    """Numerical failure at a specific input (exit status 3)."""


@dataclass
class ExperimentConfig:
    """Resolved configuration of one run."""

    command: str
    polytope: str = "square"
    grid: dict = field(default_factory=lambda: {"rho_min": -2.0, "rho_max": 2.0, "steps": 21})
    rho: Optional[list] = None
    N: int = 10
    N_list: list = field(default_factory=lambda: [10, 20, 40, 80, 160])
    w: list = field(default_factory=lambda: [[0.5]])
    interval: list = field(default_factory=lambda: [0, 1])
    orders: list = field(default_factory=lambda: list(range(0, 21, 2)))
    facet: int = 2
    seed: int = 0
    samples: int = 200
    bins: int = 20
    resolution: int = 6
    tolerances: dict = field(default_factory=dict)
    out: Optional[str] = None

    def to_json(self) -> str:
        # the output path is not part of the experiment
        obj = asdict(self)
        obj.pop("out")
        return json.dumps(obj, sort_keys=True)


_FIELDS = set(ExperimentConfig.__dataclass_fields__)
_GRID_KEYS = {"rho_min", "rho_max", "steps"}
_TOL_KEYS = {"transition", "fd_step", "rank"}


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    group, _, sub = cfg.command.partition(" ")
    if group not in COMMANDS or sub not in COMMANDS[group]:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if not isinstance(cfg.grid, dict) or set(cfg.grid) - _GRID_KEYS:
        raise ConfigError(f"grid accepts only {sorted(_GRID_KEYS)}")
    g = {"rho_min": -2.0, "rho_max": 2.0, "steps": 21, **cfg.grid}
    if int(g["steps"]) < 1 or float(g["rho_max"]) < float(g["rho_min"]):
        raise ConfigError("grid needs steps >= 1 and rho_max >= rho_min")
    cfg.grid = {"rho_min": float(g["rho_min"]), "rho_max": float(g["rho_max"]), "steps": int(g["steps"])}
    if set(cfg.tolerances) - _TOL_KEYS:
        raise ConfigError(f"tolerances accepts only {sorted(_TOL_KEYS)}")
    for name in ("N", "samples", "bins", "resolution"):
        if int(getattr(cfg, name)) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if any(int(n) < 1 for n in cfg.N_list):
        raise ConfigError("N_list entries must be >= 1")
    return cfg


def config_from_mapping(obj: dict) -> ExperimentConfig:
    unknown = set(obj) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "command" not in obj:
        raise ConfigError("config needs a command")
    return _validate(ExperimentConfig(**obj))


def _read_config_file(path: str) -> dict:
    """JSON config, or the ``# config:`` echo of a previous CSV output."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return obj


def _polytope(source: str):
    try:
        return named_polytope(source)
    except (KeyError, ValueError):
        pass
    try:
        return load_polytope(source)
    except (OSError, json.JSONDecodeError, PolytopeError) as exc:
        raise ConfigError(f"cannot load polytope {source!r}: {exc}") from None


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        return max(1, arg)
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None


def _grid_points(cfg: ExperimentConfig, m: int) -> list[np.ndarray]:
    g = cfg.grid
    axis = np.linspace(g["rho_min"], g["rho_max"], g["steps"])
    return [np.array(pt) for pt in product(axis, repeat=m)]


def _pmap(fn: Callable, items: list, threads: int) -> list:
    # output order follows input order for any thread count
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _at(rho, fn):
    try:
        return fn()
    except (SolverError, StencilError, EnumerationGuardError, FloatingPointError) as exc:
        raise NumericError(f"at rho = {list(np.round(rho, 12))}: {exc}") from exc


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class _Table:
    def __init__(self, header: list[str]):
        self.header = header
        self.rows: list[list] = []

    def add(self, *row):
        self.rows.append([_fmt(v) for v in row])

    def extend(self, rows):
        for r in rows:
            self.add(*r)


def _write(cfg: ExperimentConfig, table: _Table, comments: list[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# polyzeros {__version__}\n")
    buf.write(f"# config: {cfg.to_json()}\n")
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    w.writerows(table.rows)
    text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _rho_cols(m):
    return [f"rho{j + 1}" for j in range(m)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _polytope_info(cfg, P, threads):
    t = _Table(["face_id", "dim", "active_set", "vertex_indices", "normal_cone_generators"])
    for f in P.faces:
        t.add(f.id, f.dim, " ".join(map(str, f.active_set)), " ".join(map(str, f.vertex_indices)),
              " ".join("(" + ",".join(map(str, g)) + ")" for g in f.normal_cone_generators))
    notes = [f"m={P.m} p={P.p} dim={P.dim} simple={is_simple(P)} volume={P.volume}",
             "halfspaces: " + "; ".join(f"<x,{u}>+{lam}>=0" for u, lam in P.halfspaces)]
    return t, notes


def _polytope_ehrhart(cfg, P, threads):
    t = _Table(["power", "coefficient"])
    coeffs = ehrhart_fit(P)
    n = len(coeffs) - 1
    for k, c in enumerate(coeffs):
        t.add(n - k, str(Fraction(c)))
    return t, []


def _bp_row(P, rho, tol):
    nd = _at(rho, lambda: solve_normal_data(P, TorusPoint.from_rho(rho), tol=tol))
    reg = classify_region(P, TorusPoint.from_rho(rho), data=nd)
    return [*rho, nd.b, reg.kind, nd.face.id, *nd.tau, *nd.q]


def _bp_grid(cfg, P, threads):
    m = P.m
    tol = float(cfg.tolerances.get("transition", 1e-7))
    t = _Table(_rho_cols(m) + ["b", "region", "face_id"] + [f"tau{j + 1}" for j in range(m)]
               + [f"q{j + 1}" for j in range(m)])
    t.extend(_pmap(lambda r: _bp_row(P, r, tol), _grid_points(cfg, m), threads))
    return t, []


def _region_grid(cfg, P, threads):
    t, _ = _bp_grid(cfg, P, threads)
    keep = [t.header.index(c) for c in _rho_cols(P.m) + ["region", "face_id"]]
    out = _Table([t.header[i] for i in keep])
    out.rows = [[r[i] for i in keep] for r in t.rows]
    return out, []


def _szego_rows(P, rho, N_list):
    pt = TorusPoint.from_rho(rho)
    ui = _at(rho, lambda: u_inf(P, pt))
    rows = []
    for N in N_list:
        ev = _at(rho, lambda: szego_eval(P, int(N), pt, u_infinity=ui))
        rows.append([N, *rho, ev.log_pi, ev.mass, ev.u_N, ev.u_inf, ev.residual])
    return rows


def _szego_header(m):
    return ["N"] + _rho_cols(m) + ["log_pi", "mass", "u_N", "u_inf", "residual"]


def _szego_converge(cfg, P, threads):
    if cfg.rho is None:
        raise ConfigError("szego converge needs rho")
    rho = np.asarray(cfg.rho, dtype=float)
    if rho.shape != (P.m,):
        raise ConfigError(f"rho must have {P.m} entries")
    t = _Table(_szego_header(P.m))
    t.extend(_szego_rows(P, rho, cfg.N_list))
    return t, []


def _szego_mass_grid(cfg, P, threads):
    t = _Table(_szego_header(P.m))
    for rows in _pmap(lambda r: _szego_rows(P, r, cfg.N_list), _grid_points(cfg, P.m), threads):
        t.extend(rows)
    return t, []


def _parse_w(w, m):
    try:
        arr = np.array([complex(v) if isinstance(v, str) else v for v in np.atleast_1d(w)], dtype=complex)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse w = {w!r}") from None
    if arr.shape != (m,):
        raise ConfigError(f"w must have {m} entries")
    return arr


def _character_table(cfg, P, threads):
    m = P.m
    t = _Table(["N"] + [f"w{j + 1}" for j in range(m)] + ["log_abs", "phase", "re", "im"])
    for w in cfg.w:
        wv = _parse_w(w, m)
        for N in cfg.N_list:
            ev = _at([0.0] * m, lambda: character_exact(P, int(N), wv))
            val = ev.value
            t.add(N, *[str(c) for c in wv], ev.log_abs, ev.phase, val.real, val.imag)
    return t, []


def _character_todd1d(cfg, P, threads):
    a, b = (int(v) for v in cfg.interval)
    t = _Table(["N", "w", "order", "todd_re", "todd_im", "exact_re", "exact_im", "abs_error"])
    for w in cfg.w:
        wv = complex(np.atleast_1d(w)[0]) if not isinstance(w, str) else complex(w)
        for N in cfg.N_list:
            exact = character_1d_exact(a, b, int(N), wv)
            for order in cfg.orders:
                try:
                    val = character_1d_todd(a, b, int(N), wv, int(order))
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
                t.add(N, str(wv), order, val.real, val.imag, exact.real, exact.imag, abs(val - exact))
    return t, []


def _example_id(cfg):
    name = cfg.polytope
    if name in ("square", "trapezoid_ex2") or name.startswith("trapezoid_ex3_"):
        return name
    return None


def _psi_row(P, rho, cfg, example):
    step = float(cfg.tolerances.get("fd_step", 1e-3))
    rank_tol = float(cfg.tolerances.get("rank", 1e-4))
    pt = TorusPoint.from_rho(rho)
    try:
        psi = _at(rho, lambda: psi_density(P, pt, step=step, rank_tol=rank_tol))
    except TransitionPointError:
        return [*rho, "transition", ""] + [""] * P.m + ["", ""]
    oracle_rank, diff = "", ""
    if example is not None:
        try:
            o = oracle_psi(example, pt, rank_tol=rank_tol)
            oracle_rank = o.rank
            diff = float(np.max(np.abs(psi.matrix - o.matrix)))
        except ValueError:
            pass
    return [*rho, str(psi.region), psi.rank, *psi.eigenvalues, oracle_rank, diff]


def _psi_grid(cfg, P, threads):
    m = P.m
    ex = _example_id(cfg)
    t = _Table(_rho_cols(m) + ["region", "rank"] + [f"eig{j + 1}" for j in range(m)]
               + ["oracle_rank", "max_abs_diff"])
    rows = _pmap(lambda r: _psi_row(P, r, cfg, ex), _grid_points(cfg, m), threads)
    t.extend(rows)
    skipped = sum(1 for r in rows if r[m] == "transition")
    return t, [f"transition cells skipped: {skipped} of {len(rows)}"]


def _psi_rank_map(cfg, P, threads):
    t, notes = _psi_grid(cfg, P, threads)
    keep = list(range(P.m + 2))
    out = _Table([t.header[i] for i in keep])
    out.rows = [[r[i] for i in keep] for r in t.rows]
    return out, notes


def _psi_bk_check(cfg, P, threads):
    step = float(cfg.tolerances.get("fd_step", 1e-3))
    numeric, exact = _at([], lambda: bk_volume_check(P, cfg.resolution, step=step))
    t = _Table(["numeric", "exact", "exact_float", "rel_error"])
    t.add(numeric, str(exact), float(exact), abs(numeric - float(exact)) / float(exact))
    return t, []


def _ensemble_m1(cfg, P, threads):
    if P.m != 1:
        raise ConfigError("ensemble m1 needs a polytope with m = 1")
    st = _at([], lambda: empirical_zero_stats(P, cfg.N, cfg.samples, cfg.seed, bins=cfg.bins,
                                               threads=threads))
    t = _Table(["bin_center", "empirical_density", "predicted_density", "expected_density"])
    for row in zip(st.bin_centers, st.empirical_density, st.predicted_density, st.expected_density):
        t.add(*row)
    notes = [f"allowed_fraction={st.allowed_fraction!r}",
             f"expected_allowed_fraction={st.expected_allowed_fraction!r}",
             f"roots_per_sample={sorted(set(int(v) for v in st.roots_per_sample))}",
             f"sup_error_limit={st.sup_error_limit!r} sup_error_expected={st.sup_error_expected!r}"]
    return t, notes


def _ensemble_tentacles(cfg, P, threads):
    if P.m != 2:
        raise ConfigError("ensemble tentacles needs a polytope with m = 2")
    try:
        P1 = facet_polytope(P, cfg.facet)
    except (PolytopeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    frac = _at([], lambda: tentacle_allowed_fraction(P, cfg.facet, cfg.N, cfg.samples, cfg.seed,
                                                      threads=threads))
    a, b = min(v[0] for v in P1.vertices), max(v[0] for v in P1.vertices)
    t = _Table(["facet", "segment_lo", "segment_hi", "N", "samples", "allowed_fraction"])
    t.add(cfg.facet, a, b, cfg.N, cfg.samples, frac)
    return t, []


_DISPATCH = {
    "polytope info": _polytope_info,
    "polytope ehrhart": _polytope_ehrhart,
    "bp grid": _bp_grid,
    "region grid": _region_grid,
    "szego converge": _szego_converge,
    "szego mass-grid": _szego_mass_grid,
    "character table": _character_table,
    "character todd1d": _character_todd1d,
    "psi grid": _psi_grid,
    "psi rank-map": _psi_rank_map,
    "psi bk-check": _psi_bk_check,
    "ensemble m1": _ensemble_m1,
    "ensemble tentacles": _ensemble_tentacles,
}


def run(cfg: ExperimentConfig, threads: int = 1) -> str:
    """Execute a validated configuration and return the CSV text."""
    cfg = _validate(cfg)
    P = _polytope(cfg.polytope)
    table, notes = _DISPATCH[cfg.command](cfg, P, threads)
    return _write(cfg, table, notes)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyzeros", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polyzeros {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    for group, subs in COMMANDS.items():
        gp = groups.add_parser(group, help=f"{group} experiments")
        sp = gp.add_subparsers(dest="sub", required=True)
        for sub in subs:
            p = sp.add_parser(sub, help=f"{group} {sub}")
            p.add_argument("--config", help="JSON config file or a previous CSV output")
            p.add_argument("--polytope", help="named example or JSON polytope file")
            p.add_argument("--out", help="output CSV path (default: stdout)")
            p.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
            p.add_argument("--grid", type=float, nargs=3, metavar=("RHO_MIN", "RHO_MAX", "STEPS"))
            p.add_argument("--rho", type=float, nargs="+")
            p.add_argument("--N", type=int)
            p.add_argument("--N-list", dest="N_list", type=int, nargs="+")
            p.add_argument("--w", action="append", type=_json_arg,
                           help='w vector as JSON, e.g. "[1, 1]" or "[\\"0.5+1j\\"]"; repeatable')
            p.add_argument("--interval", type=int, nargs=2, metavar=("A", "B"))
            p.add_argument("--orders", type=int, nargs="+")
            p.add_argument("--facet", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--samples", type=int)
            p.add_argument("--bins", type=int)
            p.add_argument("--resolution", type=int)
            p.add_argument("--tol", action="append", metavar="KEY=VALUE",
                           help=f"tolerance override, keys {sorted(_TOL_KEYS)}")
            p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    obj: dict[str, Any] = {}
    if args.config:
        obj.update(_read_config_file(args.config))
    obj["command"] = f"{args.group} {args.sub}"
    for name in ("polytope", "out", "rho", "N", "N_list", "w", "interval", "orders", "facet",
                 "seed", "samples", "bins", "resolution"):
        val = getattr(args, name)
        if val is not None:
            obj[name] = val
    if args.grid is not None:
        obj["grid"] = {"rho_min": args.grid[0], "rho_max": args.grid[1], "steps": int(args.grid[2])}
    if args.tol:
        tol = dict(obj.get("tolerances", {}))
        for item in args.tol:
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"--tol expects KEY=VALUE, got {item!r}")
            try:
                tol[key] = float(val)
            except ValueError:
                raise ConfigError(f"--tol {key}: {val!r} is not a number") from None
        obj["tolerances"] = tol
    return config_from_mapping(obj)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = _threads(args.threads)
        cfg = _config_from_args(args)
        run(cfg, threads=threads)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return 2
    except (NumericError, SolverError, StencilError, EnumerationGuardError) as exc:
        logger.error("numerical failure %s", exc)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
