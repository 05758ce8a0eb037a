"""Command-line front end: ``weakrec {regress,classify,kernel,simulate,verify-all}``.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 numeric failure, 4 unmet precondition (e.g. no eigenvalue to build a kernel from).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import acceptance
from .errors import NotEigen, StreamBudgetExceeded
from .operator import TruncationWindow, apply_A, regression_vector
from .pmf import DiscretePmf, parse_dist
from .simulate import estimate_regression, fit_line
from .spectral import classify_injectivity, kernel_vector

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 1, 2, 3, 4
NONLINEAR_Z = 10.0
COMMANDS = ("regress", "classify", "kernel", "simulate", "verify-all")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dist: str | None = None
    s: int | None = None
    gamma1: float | None = None
    M: int = 2000
    L: int = 200
    tol: float = 1e-8
    seed: int = 0
    paths: int = 10_000
    jmax: int = 10
    out: str | None = None
    format: str = "csv"
    only: str | None = None

    def validate(self, command: str) -> None:
        if command != "verify-all":
            if self.dist is None:
                raise ConfigError("--dist is required")
            if self.s is None:
                raise ConfigError("--s is required")
        if self.s is not None and self.s < 1:
            raise ConfigError("s must be >= 1")
        if command in ("classify", "kernel") and self.s < 2:
            raise ConfigError("s must be >= 2")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.M < 2 or not 1 <= self.L <= self.M:
            raise ConfigError("need M >= 2 and 1 <= L <= M")
        if self.gamma1 is not None and not self.gamma1 > 0:
            raise ConfigError("gamma1 must be positive")
        if command == "simulate" and self.paths < 100:
            raise ConfigError("paths must be at least 100")
        if self.jmax < 1:
            raise ConfigError("jmax must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.only is not None and self.only not in set(acceptance.AREAS.values()):
            raise ConfigError(f"--only must be one of {sorted(set(acceptance.AREAS.values()))}")

    def window(self) -> TruncationWindow:
        return TruncationWindow(self.M, self.L, self.tol)

    def law(self) -> DiscretePmf:
        return parse_dist(self.dist)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults stay None so that only flags given explicitly override the config file
    common.add_argument("--config", help="JSON file with ExperimentConfig fields; flags win")
    common.add_argument("--dist", help="geo:<theta> | gamma:<g0>,<g1> | raw:<p0>,<p1>,...")
    common.add_argument("--s", type=int, help="regression gap")
    common.add_argument("--gamma1", type=float, help="gamma1 used by classify and kernel (default: family value or 1)")
    common.add_argument("--M", type=int, help="computation window (default 2000)")
    common.add_argument("--L", type=int, help="reported prefix (default 200)")
    common.add_argument("--tol", type=float, help="tolerance (default 1e-8)")
    common.add_argument("--seed", type=int, help="RNG seed (default 0)")
    common.add_argument("--paths", type=int, help="Monte Carlo paths per starting value (default 10000)")
    common.add_argument("--jmax", type=int, help="simulate starting values 0..jmax-1 (default 10)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")

    parser = argparse.ArgumentParser(prog="weakrec", description="Regression of weak records on discrete laws.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("regress", parents=[common], help="e_1..e_s on a prefix and a fitted line")
    sub.add_parser("classify", parents=[common], help="injectivity of B_s")
    sub.add_parser("kernel", parents=[common], help="real kernel vector of B_s")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo E(W_{i+s} | W_i = j)")
    va = sub.add_parser("verify-all", parents=[common], help="run the acceptance grid")
    va.add_argument("--only", choices=sorted(set(acceptance.AREAS.values())), help="restrict to one area")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - fields
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for name in fields:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# -- output -----------------------------------------------------------------


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _flatten(row: dict) -> dict:
    flat = {}
    for k, v in row.items():
        if isinstance(v, (complex, np.complexfloating)):
            flat[f"{k}_re"], flat[f"{k}_im"] = float(v.real), float(v.imag)
        else:
            flat[k] = v
    return flat


def render(command: str, cfg: ExperimentConfig, rows: list[dict], summary: dict) -> str:
    if cfg.format == "json":
        doc = {"command": command, "config": dataclasses.asdict(cfg), "summary": summary, "rows": rows}
        return json.dumps(_plain(doc), indent=2) + "\n"
    buf = io.StringIO()
    flat = [_flatten(r) for r in rows]
    header = list(flat[0]) if flat else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in flat:
        w.writerow([_cell(r[h]) for h in header])
    return buf.getvalue()


def emit(text: str, cfg: ExperimentConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------


def _gamma1(cfg: ExperimentConfig, d: DiscretePmf) -> float:
    if cfg.gamma1 is not None:
        return cfg.gamma1
    return d.gamma.gamma1 if d.gamma is not None else 1.0


def cmd_regress(cfg: ExperimentConfig):
    d = cfg.law()
    window = cfg.window().fit(d)
    e = regression_vector(d, 1, window)
    columns = [e.values(d)]
    for _ in range(1, cfg.s):
        e = apply_A(e, d)
        columns.append(e.values(d))
    j = np.arange(len(columns[0]))
    es = columns[-1]
    if len(j) >= 2:
        fit = fit_line([(jj, v, cfg.tol) for jj, v in zip(j, es)])
        b0, b1, zmax = fit.beta0, fit.beta1, fit.max_residual
    else:
        b0, b1, zmax = float(es[0]), 0.0, 0.0
    dev = es - b0 - b1 * j
    max_d = float(np.max(np.abs(dev)))
    nonlinear = zmax > NONLINEAR_Z
    rows = []
    for i in range(len(j)):
        row = {"j": int(j[i])}
        row.update({f"e_{m + 1}": float(col[i]) for m, col in enumerate(columns)})
        row[f"d_{cfg.s}"] = float(dev[i])
        row.update(beta0_hat=b0, beta1_hat=b1, max_abs_d_s=max_d, nonlinear=nonlinear)
        rows.append(row)
    summary = {"beta0_hat": b0, "beta1_hat": b1, "max_abs_d_s": max_d, "max_std_residual": zmax, "nonlinear": nonlinear}
    note = f"beta0={b0:.10g} beta1={b1:.10g} max|d_{cfg.s}|={max_d:.3e}" + (" NONLINEAR" if nonlinear else "")
    return rows, summary, note, EXIT_OK


def cmd_classify(cfg: ExperimentConfig):
    d = cfg.law()
    g1 = _gamma1(cfg, d)
    v = classify_injectivity(cfg.s, g1, d, cfg.window())
    n = min(cfg.L, len(v.a_factors))
    rows = []
    for k in range(n):
        rows.append(
            {
                "k": k,
                "a_k": float(v.a_factors[k]),
                "log_product": float(v.log_product[k - 1]) if k >= 1 else 0.0,
                "sstar_partial": float(v.sstar_partials[k - 1]) if k >= 1 else 0.0,
                "abs_S": float(v.s_partials[k]),
                "injective": v.injective,
            }
        )
    summary = dict(v.summary(), gamma1=g1, s=cfg.s, ell_minima={str(k): m for k, m in v.ell_minima.items()})
    verdict = {"yes": "injective", "no": "non-injective"}.get(v.injective, "inconclusive")
    return rows, summary, f"s={cfg.s} gamma1={g1:g}: {verdict} ({v.rationale})", EXIT_OK


def cmd_kernel(cfg: ExperimentConfig):
    d = cfg.law()
    g1 = _gamma1(cfg, d)
    k = kernel_vector(cfg.s, g1, d, cfg.window())
    z = k.z.values(d)
    x = k.x.values(d)
    rows = [
        {"j": j, "z": float(z[j]), "x": complex(x[j]), "eigen_residual": k.eigen_residual, "kernel_residual": k.residual}
        for j in range(len(z))
    ]
    summary = {
        "lambda": k.x.lam,
        "M": k.z.window.M,
        "L": k.z.window.L,
        "eigen_residual": k.eigen_residual,
        "kernel_residual": k.residual,
        "certified_error": k.certified_error,
    }
    note = f"||B_s z||/||z|| = {k.residual:.3e} at M={k.z.window.M}; eigen residual {k.eigen_residual:.3e}"
    return rows, summary, note, EXIT_OK


def cmd_simulate(cfg: ExperimentConfig):
    d = cfg.law()
    js = list(range(cfg.jmax if not d.is_finite else min(cfg.jmax, d.support + 1)))
    exact = regression_vector(d, cfg.s, TruncationWindow(max(cfg.M, len(js)), len(js), cfg.tol)).values(d)
    est = estimate_regression(d, cfg.s, js, cfg.paths, cfg.seed)
    rows = []
    for e in est:
        z = (e.mean - exact[e.j]) / e.stderr if e.stderr > 0 else (0.0 if e.mean == exact[e.j] else math.inf)
        rows.append({"j": e.j, "mean": e.mean, "stderr": e.stderr, "exact": float(exact[e.j]), "z_score": z})
    zmax = max(abs(r["z_score"]) for r in rows)
    summary = {"max_abs_z": zmax, "paths": cfg.paths, "seed": cfg.seed}
    if len(js) >= 2:
        fit = fit_line([(e.j, e.mean, e.stderr) for e in est])
        summary.update(beta0_hat=fit.beta0, beta1_hat=fit.beta1, max_std_residual=fit.max_residual)
    return rows, summary, f"max |z| = {zmax:.2f} over {len(js)} starting values", EXIT_OK


def cmd_verify_all(cfg: ExperimentConfig):
    results = acceptance.run(cfg.only)
    if cfg.dist is not None:
        d = cfg.law()
        for s in [cfg.s] if cfg.s is not None else range(1, 7):
            results.append(acceptance.linearity_check(d, s, cfg.window()))
    for r in results:
        print(r.line(), file=sys.stderr)
    # wall-clock times go to stderr only, keeping the report deterministic
    rows = [{"number": r.number, "name": r.name, "area": r.area, "passed": r.passed, "detail": r.detail} for r in results]
    failed = [r for r in results if not r.passed]
    summary = {"total": len(results), "failed": len(failed)}
    return rows, summary, f"{len(results) - len(failed)}/{len(results)} criteria passed", EXIT_VERIFY if failed else EXIT_OK


HANDLERS = {
    "regress": cmd_regress,
    "classify": cmd_classify,
    "kernel": cmd_kernel,
    "simulate": cmd_simulate,
    "verify-all": cmd_verify_all,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        cfg.validate(args.command)
        rows, summary, note, code = HANDLERS[args.command](cfg)
    except NotEigen as exc:
        print(f"weakrec: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ArithmeticError, StreamBudgetExceeded) as exc:
        print(f"weakrec: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"weakrec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    emit(render(args.command, cfg, rows, summary), cfg)
    print(note, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
