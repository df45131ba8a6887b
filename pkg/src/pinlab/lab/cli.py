"""
Command line interface.

Exit status: 0 on success, 1 when a check fails, 2 on usage or input errors.
Tables go to stdout as CSV; ``--out DIR`` also writes the CSV and a PNG
figure into DIR.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from ..disorder import make_env_law
from ..errors import DomainError
from ..polymer import PolymerParams, critical_point_scan, quenched_free_energy_mc
from ..relevance import (PenaltyConfig, dual_peak_probability_mc, fractional_moment_mc,
                         penalized_block_decomposition_mc, penalized_block_mc, penalty_cost_mc)
from ..renewal import make_zeta_law
from . import checks
from .config import ESTIMATE_COLUMN, ConfigError, SweepConfig, write_example
from .figures import plot_rows, to_csv
from .store import Store, StoreError
from .sweep import MarginalRow, marginal_scan, run_sweep


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _emit(args, rows: list[dict], columns: list[str], name: str, x: str, y: str,
          yerr: str | None = None, group=None, logy=False):
    text = to_csv(rows, columns)
    sys.stdout.write(text)
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.csv").write_text(text)
        if rows:
            plot_rows(rows, x, y, out / f"{name}.png", yerr=yerr, group=group, title=name,
                      logy=logy)


def _model_args(p):
    p.add_argument("--alpha", type=float, default=None, help="renewal exponent (default 1 - 1/gamma)")
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--n-max", type=int, default=10**6)


def _mc_args(p, n=1000):
    p.add_argument("--replicas", type=int, default=n)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="directory for CSV and PNG output")


def _laws(args):
    env = make_env_law(args.gamma, args.a)
    alpha = env.marginal_alpha if args.alpha is None else args.alpha
    return make_zeta_law(alpha, args.n_max), env


def cmd_verify(args) -> int:
    results = checks.verify(args.level, faults=args.inject or (), only=args.only,
                            workers=args.workers, progress=lambda r: print(r.line(), flush=True))
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    if args.json:
        Path(args.json).write_text(checks.report_json(results) + "\n")
    return 1 if n_fail else 0


def cmd_free_energy(args) -> int:
    law, env = _laws(args)
    if args.scan:
        rows = []
        for beta in args.beta:
            scan = critical_point_scan(beta, args.h, args.N, args.replicas, args.seed, law, env,
                                       args.workers)
            rows += [dict(beta=beta, h=r.h, N=args.N, f_hat=r.estimate, stderr=r.stderr,
                          floor=scan.floor, crossed=int(r.crossed)) for r in scan.rows]
            print(f"# beta={beta}: crossing h = {scan.crossing_h}", file=sys.stderr)
        cols = ["beta", "h", "N", "f_hat", "stderr", "floor", "crossed"]
    else:
        rows = []
        for beta in args.beta:
            for h in args.h:
                est = quenched_free_energy_mc(PolymerParams(beta, h, args.N, law, env),
                                              args.replicas, args.seed, args.workers)
                rows.append(dict(beta=beta, h=h, N=args.N, f_hat=est.estimate, stderr=est.stderr))
        cols = ["beta", "h", "N", "f_hat", "stderr"]
    _emit(args, rows, cols, "free_energy", "h", "f_hat", "stderr", ["beta"])
    return 0


def cmd_frac_moment(args) -> int:
    law, env = _laws(args)
    rows = []
    for beta in args.beta:
        for h in args.h:
            params = PolymerParams(beta, h, args.N, law, env)
            fm = fractional_moment_mc(params, args.theta, args.replicas, args.seed, args.ell,
                                      args.workers)
            row = dict(beta=beta, h=h, N=args.N, theta=args.theta,
                       moment_hat=fm.total.mean, stderr=fm.total.stderr)
            if fm.per_subset is not None:
                row["subset_sum"] = sum(e.mean for e in fm.per_subset.values())
            rows.append(row)
    cols = ["beta", "h", "N", "theta", "moment_hat", "stderr"]
    if args.ell:
        cols.append("subset_sum")
    _emit(args, rows, cols, "frac_moment", "h", "moment_hat", "stderr", ["beta"])
    return 0


def cmd_dual_peak(args) -> int:
    env = make_env_law(args.gamma, args.a)
    rows = []
    for M in args.M:
        cfg = PenaltyConfig(M=M, ell=args.ell, gamma=args.gamma, theta=args.theta)
        p = dual_peak_probability_mc(cfg, env, args.replicas, args.seed, args.method, args.workers)
        cost = penalty_cost_mc(cfg, env, args.replicas, args.seed + 1, args.workers)
        rows.append(dict(M=M, ell=args.ell, p_hat=p.estimate.mean, stderr=p.estimate.stderr,
                         cost_hat=cost.cost.mean, cost_stderr=cost.cost.stderr))
    _emit(args, rows, ["M", "ell", "p_hat", "stderr", "cost_hat", "cost_stderr"], "dual_peak",
          "M", "p_hat", "stderr", logy=True)
    return 0


def cmd_block_benefit(args) -> int:
    law, env = _laws(args)
    rows = []
    for ell in args.ell:
        ell = int(ell)
        cfg = PenaltyConfig(M=args.M, ell=ell, gamma=args.gamma, eta=args.eta)
        params = PolymerParams(args.beta, 0.0, ell, law, env)
        d = args.d
        f = ell if args.f is None else args.f
        est = penalized_block_mc(params, cfg, d, f, args.replicas, args.seed, args.workers)
        row = dict(beta=args.beta, M=args.M, ell=ell, d=d, f=f, benefit_hat=est.mean,
                   stderr=est.stderr)
        if args.decomposition:
            dec = penalized_block_decomposition_mc(params, cfg, d, f, args.replicas,
                                                   args.seed + 1, args.workers)
            row.update(decomposed=dec.mean, decomposed_stderr=dec.stderr)
        rows.append(row)
    cols = ["beta", "M", "ell", "d", "f", "benefit_hat", "stderr"]
    if args.decomposition:
        cols += ["decomposed", "decomposed_stderr"]
    _emit(args, rows, cols, "block_benefit", "ell", "benefit_hat", "stderr")
    return 0


def cmd_marginal_scan(args) -> int:
    rows = marginal_scan(args.beta, args.A, args.M, args.eta, args.replicas, args.seed,
                         gamma=args.gamma, a=args.a, theta=args.theta, ell_max=args.ell_max,
                         exponent=args.exponent, workers=args.workers)
    dicts = [dataclasses.asdict(r) for r in rows]
    for d in dicts:
        for k, v in d.items():
            if isinstance(v, bool):
                d[k] = int(v)
    cols = [f.name for f in dataclasses.fields(MarginalRow)]
    _emit(args, dicts, cols, "marginal_scan", "beta", "cost", "cost_stderr")
    return 0


def cmd_sweep(args) -> int:
    if args.example:
        write_example(args.config)
        print(f"wrote example config to {args.config}")
        return 0
    cfg = SweepConfig.load(args.config)
    store = Store(args.store or cfg.store)
    new = run_sweep(cfg, store, workers=args.workers)
    print(f"experiment {cfg.experiment_id}: {len(new)} new records in {store.exp_dir(cfg.experiment_id)}")
    return 0


def plot_data(store: Store, exp_id: str, kind: str | None = None):
    """(csv text, rows, columns, operation) for one experiment."""
    man = store.manifest(exp_id)
    cfg = SweepConfig.from_dict(man.config)
    op = kind or cfg.operation
    if op not in ESTIMATE_COLUMN:
        raise UsageError(f"unknown kind {op!r}; known: {sorted(ESTIMATE_COLUMN)}")
    params = cfg.varied()
    est = ESTIMATE_COLUMN[op]
    rows = []
    for r in store.records(exp_id):
        if r.operation != op:
            continue
        row = {k: r.point[k] for k in params}
        row.update({est: r.estimate, "stderr": r.stderr})
        rows.append(row)
    cols = params + [est, "stderr"]
    return to_csv(rows, cols), rows, cols, op


def cmd_plot_data(args) -> int:
    store = Store(args.store)
    text, rows, cols, op = plot_data(store, args.experiment, args.kind)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{args.experiment}_{op}"
        (out / f"{stem}.csv").write_text(text)
        params = cols[:-2]
        if rows and params:
            plot_rows(rows, params[-1], cols[-2], out / f"{stem}.png", yerr="stderr",
                      group=params[:-1], title=op)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pinlab", description=__doc__.split("\n\n")[0].strip())
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--level", choices=checks.LEVELS, default="fast")
    p.add_argument("--inject", action="append", choices=checks.FAULTS,
                   help="inject a fault to confirm the checks catch it")
    p.add_argument("--only", action="append", help="run checks whose name contains this text")
    p.add_argument("--json", help="write a machine-readable report here")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("free-energy", help="quenched free energy (1/N) E log Z")
    _model_args(p)
    p.add_argument("--beta", type=_floats, default=[0.5])
    p.add_argument("--h", type=_floats, default=[0.0])
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--scan", action="store_true", help="flag the finite-size crossing along h")
    _mc_args(p)
    p.set_defaults(func=cmd_free_energy)

    p = sub.add_parser("frac-moment", help="fractional moment E[Z^theta]")
    _model_args(p)
    p.add_argument("--beta", type=_floats, default=[0.5])
    p.add_argument("--h", type=_floats, default=[0.0])
    p.add_argument("--N", type=int, default=12)
    p.add_argument("--theta", type=float, default=0.8)
    p.add_argument("--ell", type=int, default=None, help="also sum E[(Z^I)^theta] over blocks")
    _mc_args(p)
    p.set_defaults(func=cmd_frac_moment)

    p = sub.add_parser("dual-peak", help="dual-peak probability and penalty cost")
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--M", type=_floats, default=[1.0, 1.25, 1.5])
    p.add_argument("--ell", type=int, default=1024)
    p.add_argument("--theta", type=float, default=0.8)
    p.add_argument("--method", choices=("conditional", "plain"), default="conditional")
    _mc_args(p, 10**4)
    p.set_defaults(func=cmd_dual_peak)

    p = sub.add_parser("block-benefit", help="E[g Z^0_[d,f]] over one block")
    _model_args(p)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--ell", type=_floats, default=[64.0])
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--f", type=int, default=None, help="defaults to ell")
    p.add_argument("--decomposition", action="store_true",
                   help="also estimate through the tilted-measure decomposition")
    _mc_args(p)
    p.set_defaults(func=cmd_block_benefit)

    p = sub.add_parser("marginal-scan", help="h_beta, ell and penalty diagnostics along beta")
    p.add_argument("--beta", type=_floats, default=[1.0, 0.8, 0.7, 0.6])
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.8)
    p.add_argument("--ell-max", type=int, default=256)
    p.add_argument("--exponent", type=float, default=None,
                   help="h_beta = exp(-A beta^exponent); default -2 gamma")
    _mc_args(p, 500)
    p.set_defaults(func=cmd_marginal_scan)

    p = sub.add_parser("sweep", help="run a resumable sweep from a JSON config")
    p.add_argument("config")
    p.add_argument("--store", help="store root (default $PINLAB_STORE or ./pinlab-store)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--example", action="store_true", help="write an example config and exit")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot-data", help="CSV (and PNG with --out) for a stored experiment")
    p.add_argument("experiment")
    p.add_argument("--kind", default=None, help="operation to export (default: the experiment's)")
    p.add_argument("--store")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot_data)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ConfigError, StoreError, UsageError, FileNotFoundError,
            ValueError) as exc:
        print(f"pinlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
