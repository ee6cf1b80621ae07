"""Command-line front end.

Subcommands::

    expand   build the Taylor state, write ledger.csv, state.clxt and fit.json
    verify   run the invariant suite and write verify.json
    combi    exact combinatorial sums, combi.csv
    step     summed trajectories on a time grid, trajectories.csv
    fd       difference-quotient consistency table, fd.csv

Settings come from defaults, then an optional ``--config`` file of
``key=value`` lines, then flags.  Tolerances are overridden with keys of the
form ``tol.<name>`` (file) or ``--tol name=value`` (flag).  Any failure prints
a JSON error record and exits with status 1; ``verify`` exits with 3 when a
check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import DomainSpec
from .errors import ConfigError, LagTaylorError
from .fields import TensorField, sobolev_distance, sobolev_array
from .majorant import combinatorial_table, fit_majorant, n3_maxima, verify_fit
from .presets import make_preset_field
from .recursion import (GENERAL, LEDGER_COLUMNS, SC, boundary_flux_residual, canonical_path,
                        cauchy_invariance_residual, det_residual, divergence_residual, expand,
                        gradient_consistency, piola_residual, summed_Y)
from .snapshot import atomic_write, load_state, save_state
from .stepper import fd_consistency, mean_value_slack, trajectories
from .tolerances import resolve

EXIT_ERROR = 1
EXIT_CHECK_FAILED = 3


@dataclass
class ExperimentConfig:
    preset: str = "rigid-rotation"
    omega: float = 1.0
    shear_coeffs: tuple = (0.0, 0.0, 1.0)
    seed: int = 0
    decay: float = 0.5
    domain: str = "disk"
    r_inner: float | None = None
    r_outer: float | None = None
    ntheta: int = 48
    nr: int = 32
    sobolev_r: int = 2
    path: str | None = None
    order: int = 8
    time: float | None = None
    h: float = 1e-2
    max_n: int = 200
    out: str = "."
    checkpoint: str | None = None
    tolerances: dict = field(default_factory=dict)

    def domain_spec(self) -> DomainSpec:
        if self.domain == "disk":
            return DomainSpec.disk(self.r_outer or 1.0, self.ntheta, self.nr, self.sobolev_r)
        if self.domain == "annulus":
            ri = 1.0 if self.r_inner is None else self.r_inner
            ro = 2.0 if self.r_outer is None else self.r_outer
            return DomainSpec.annulus(ri, ro, self.ntheta, self.nr, self.sobolev_r)
        raise ConfigError(f"domain must be 'disk' or 'annulus', got {self.domain!r}")

    def resolved_path(self) -> str:
        if self.path is None:
            return SC if self.domain == "disk" else GENERAL
        return canonical_path(self.path)

    def preset_params(self) -> dict:
        return {"omega": self.omega, "shear_coeffs": tuple(self.shear_coeffs),
                "seed": self.seed, "decay": self.decay}

    def tol(self) -> dict:
        return resolve(self.tolerances)


_CASTS = {
    "preset": str, "omega": float, "seed": int, "decay": float, "domain": str,
    "r_inner": float, "r_outer": float, "ntheta": int, "nr": int, "sobolev_r": int,
    "path": str, "order": int, "time": float, "h": float, "max_n": int, "out": str,
    "checkpoint": str,
}


def _coeffs(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _apply(cfg: ExperimentConfig, key: str, value, source: str) -> ExperimentConfig:
    name = key.strip().replace("-", "_")
    try:
        if name.startswith("tol.") or name.startswith("tol_"):
            tols = dict(cfg.tolerances)
            tols[name[4:]] = float(value)
            resolve(tols)
            return replace(cfg, tolerances=tols)
        if name == "shear_coeffs":
            return replace(cfg, shear_coeffs=_coeffs(value))
        if name not in _CASTS:
            raise ConfigError(f"unknown config key {key!r} in {source}")
        return replace(cfg, **{name: _CASTS[name](value)})
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key!r} in {source}: {value!r}") from None


def read_config_file(path: str, cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    cfg = cfg or ExperimentConfig()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            cfg = _apply(cfg, k, v.strip(), f"{path}:{lineno}")
    return cfg


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="key=value file; flags override it")
    a("--preset")
    a("--omega", type=float)
    a("--shear-coeffs", help="comma-separated coefficients of f(r) = sum c_k r^k")
    a("--seed", type=int)
    a("--decay", type=float)
    a("--domain", choices=("disk", "annulus"))
    a("--r-inner", type=float)
    a("--r-outer", type=float)
    a("--ntheta", type=int)
    a("--nr", type=int)
    a("--sobolev-r", type=int)
    a("--path", choices=("sc", "general"))
    a("--order", type=int)
    a("--time", type=float)
    a("--h", type=float)
    a("--max-n", type=int)
    a("--out", help="output directory")
    a("--checkpoint", help="CLXT file to resume from")
    a("--tol", action="append", default=[], metavar="NAME=VALUE",
      help="override one default tolerance")
    p = argparse.ArgumentParser(prog="lagtaylor",
                                description="Lagrangian time-Taylor expansion of 2D Euler flow")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("expand", "compute coefficients, ledger and fit"),
                       ("verify", "run the invariant suite"),
                       ("combi", "exact combinatorial sums"),
                       ("step", "summed trajectories on a time grid"),
                       ("fd", "difference-quotient consistency table")):
        sub.add_parser(name, parents=[common], help=text)
    return p


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if ns.config:
        cfg = read_config_file(ns.config, cfg)
    for key in _CASTS:
        v = getattr(ns, key, None)
        if v is not None:
            cfg = _apply(cfg, key, v, "flags")
    if ns.shear_coeffs is not None:
        cfg = _apply(cfg, "shear_coeffs", ns.shear_coeffs, "flags")
    for item in ns.tol:
        if "=" not in item:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg = _apply(cfg, "tol." + k, v, "flags")
    return cfg


# -- helpers -----------------------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    def fix(v):
        if isinstance(v, float) and not math.isfinite(v):
            return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [fix(x) for x in v]
        if isinstance(v, (np.floating, np.integer, np.bool_)):
            return fix(v.item())
        return v
    return json.dumps(fix(obj), indent=2, sort_keys=True) + "\n"


def _out(cfg: ExperimentConfig, name: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def build_state(cfg: ExperimentConfig):
    """Fresh or resumed state expanded to ``cfg.order``."""
    tol = cfg.tol()["neumann_compat"]
    if cfg.checkpoint:
        state = load_state(cfg.checkpoint, cfg.sobolev_r)
        if state.N < cfg.order:
            state = expand(None, state.domain, state.path, cfg.order, resume=state, tol=tol)
        return state
    dom = cfg.domain_spec()
    v0, w0 = make_preset_field(cfg.preset, cfg.preset_params(), dom)
    return expand((v0, w0), dom, cfg.resolved_path(), cfg.order, tol=tol)


def ledger_csv(state) -> str:
    rows = [[str(n)] + [_fmt(v) for v in row] for n, row in enumerate(state.ledger.rows)]
    return _csv(("n",) + LEDGER_COLUMNS, rows)


def default_labels(dom: DomainSpec) -> np.ndarray:
    lo = dom.r_inner
    radii = [lo + f * (dom.r_outer - lo) for f in (0.25, 0.5, 0.75)]
    angles = np.arange(4) * (np.pi / 2)
    return np.array([(r * np.cos(a), r * np.sin(a)) for r in radii for a in angles])


# -- subcommands -------------------------------------------------------------------------

def cmd_expand(cfg: ExperimentConfig) -> int:
    state = build_state(cfg)
    fit = fit_majorant(state.ledger)
    atomic_write(_out(cfg, "ledger.csv"), ledger_csv(state))
    save_state(state, _out(cfg, "state.clxt"))
    atomic_write(_out(cfg, "fit.json"), _json(fit.report(cfg.max_n)))
    return 0


def run_checks(cfg: ExperimentConfig, state) -> dict:
    tol = cfg.tol()
    fit = fit_majorant(state.ledger)
    t = cfg.time if cfg.time is not None else (0.25 * fit.rho if math.isfinite(fit.rho) else 0.25)
    dom = state.domain
    N = state.N
    checks = {
        "boundary_flux": (max(boundary_flux_residual(state, n) for n in range(N + 1)),
                          tol["boundary_flux"]),
        "gradient_consistency": (max(gradient_consistency(state, n) for n in range(N + 1)),
                                 tol["gradient_consistency"]),
        "pressure_compat": (max(state.compat_defects) if state.compat_defects else 0.0,
                            tol["pressure_compat"]),
        "invariance": (cauchy_invariance_residual(state, t), tol["invariance"]),
        "divergence": (divergence_residual(state, t), tol["divergence"]),
        "piola": (piola_residual(TensorField(dom, summed_Y(state, t))), tol["piola"]),
        "det_one": (det_residual(state, t), tol["det_one"]),
        "majorant_bounds": (0.0 if verify_fit(state.ledger, fit) else 1.0, 0.0),
    }
    if dom.is_disk and not cfg.checkpoint:
        other = GENERAL if state.path == SC else SC
        v0, w0 = make_preset_field(cfg.preset, cfg.preset_params(), dom)
        alt = expand((v0, w0), dom, other, N, tol=tol["neumann_compat"])
        gap = 0.0
        for n in range(N + 1):
            a, b = state.Vc[n].values, alt.Vc[n].values
            nrm = sobolev_array(dom, a, dom.sobolev_r)
            if nrm > 0:
                gap = max(gap, sobolev_distance(dom, a, b, dom.sobolev_r) / nrm)
        checks["two_path"] = (gap, tol["two_path"])
    out = {k: {"value": float(v), "tol": float(tl), "pass": bool(v <= tl)}
           for k, (v, tl) in checks.items()}
    return {"time": t, "rho": fit.rho, "checks": out,
            "passed": all(c["pass"] for c in out.values())}


def cmd_verify(cfg: ExperimentConfig) -> int:
    state = build_state(cfg)
    rec = run_checks(cfg, state)
    atomic_write(_out(cfg, "verify.json"), _json(rec))
    return 0 if rec["passed"] else EXIT_CHECK_FAILED


def cmd_combi(cfg: ExperimentConfig) -> int:
    rows = []
    for n, ts, ds in combinatorial_table(cfg.max_n):
        rows.append([str(n), str(ts), str(ds), _fmt(n**3 * ts), _fmt(n**3 * ds)])
    atomic_write(_out(cfg, "combi.csv"),
                 _csv(("n", "triple_sum", "double_sum", "n3_triple", "n3_double"), rows))
    t, d = n3_maxima(cfg.max_n)
    atomic_write(_out(cfg, "combi.json"),
                 _json({"max_n": cfg.max_n, "max_n3_triple": float(t),
                        "max_n3_double": float(d)}))
    return 0


def cmd_step(cfg: ExperimentConfig) -> int:
    state = build_state(cfg)
    fit = fit_majorant(state.ledger)
    T = cfg.time if cfg.time is not None else (0.5 * fit.rho if math.isfinite(fit.rho) else 1.0)
    times = np.linspace(0.0, T, 11)
    ts = trajectories(state, default_labels(state.domain), times, rho=fit.rho)
    atomic_write(_out(cfg, "trajectories.csv"), ts.to_csv())
    return 0


def cmd_fd(cfg: ExperimentConfig) -> int:
    state = build_state(cfg)
    fit = fit_majorant(state.ledger)
    rows = []
    for n in range(max(0, min(3, state.N - 1))):
        prev = None
        for k in range(4):
            h = cfg.h / 2**k
            e = fd_consistency(state, h, n, rho=fit.rho)
            c = fd_consistency(state, h, n, "central", rho=fit.rho)
            s = mean_value_slack(state, h, n, rho=fit.rho)
            ratio = prev[0] / e if prev and e > 0 else float("nan")
            cratio = prev[1] / c if prev and c > 0 else float("nan")
            rows.append([str(n), _fmt(h), _fmt(e), _fmt(ratio), _fmt(c), _fmt(cratio), _fmt(s)])
            prev = (e, c)
    atomic_write(_out(cfg, "fd.csv"),
                 _csv(("n", "h", "forward_error", "forward_ratio", "central_error",
                       "central_ratio", "mean_value_slack"), rows))
    return 0


COMMANDS = {"expand": cmd_expand, "verify": cmd_verify, "combi": cmd_combi,
            "step": cmd_step, "fd": cmd_fd}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[ns.command](cfg)
    except (LagTaylorError, ValueError, OSError) as exc:
        rec = {"error": type(exc).__name__, "message": str(exc), "command": ns.command}
        sys.stdout.write(json.dumps(rec, sort_keys=True) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
