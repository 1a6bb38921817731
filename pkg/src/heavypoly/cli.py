"""Command-line entry point: ``heavypoly <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error (including bad flags),
3 numerical contract violation.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from . import __version__, _kernels
from . import coarse_grain, order_stats, partition, size_bias
from .config import (SUBCOMMANDS, build_env, build_law, digest,
                     load_config_file, resolve, validate)
from .environment import lemma_a1_diagnostics
from .errors import ConfigError, ContractViolation
from .logmag import LogMagnitude
from .walk_laws import Overflow

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT = 0, 2, 3


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="flat YAML/JSON key-value file")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--workers", type=int, help="replica worker processes (default 1)")
    g.add_argument("--out", help="output path (default stdout)")
    g.add_argument("--format", choices=("csv", "jsonl"), help="output format (default jsonl)")
    g.add_argument("--dry-run", action="store_true", help="print diagnostics and exit")
    w = common.add_argument_group("walk law")
    w.add_argument("--family", help="critical | log_tail | loglog_tail | power_tail | nearest_neighbor")
    w.add_argument("--alpha", type=float)
    w.add_argument("--a", type=float)
    w.add_argument("--b", type=float)
    w.add_argument("--m0", type=int)
    w.add_argument("--k0", type=float)
    e = common.add_argument_group("environment")
    e.add_argument("--env", help="gaussian | bernoulli | discrete")
    e.add_argument("--p", type=float, help="bernoulli success probability")
    e.add_argument("--atoms", help="discrete atoms as v1:p1,v2:p2")
    m = common.add_argument_group("experiment")
    m.add_argument("--beta", help="inverse temperature, or comma list")
    m.add_argument("--N", help="horizon, or comma list")
    m.add_argument("--M", type=int, help="window half-width")
    m.add_argument("--replicas", type=int)
    m.add_argument("--L", help="detector thresholds, comma list")
    m.add_argument("--N-grid", dest="N_grid", help="detector horizons, comma list")
    m.add_argument("--K", type=float, help="growth base for order statistics")
    m.add_argument("--n-max", dest="n_max", type=int)
    m.add_argument("--n-min", dest="n_min", type=int)
    m.add_argument("--identity-n", dest="identity_n", type=int)
    m.add_argument("--R", type=int, help="truncation radius for the convolution check")
    m.add_argument("--n-steps", dest="n_steps", type=int)
    m.add_argument("--gamma", type=float)
    m.add_argument("--n", help="sample sizes for condition-c, comma list")
    m.add_argument("--epsilon", type=float)
    m.add_argument("--samples", type=int)
    m.add_argument("--beta-grid", dest="beta_grid", help="comma list for lemma-a1")
    m.add_argument("--threshold", type=float, help="level K below ess sup for lemma-a1")
    m.add_argument("--cap", type=int, help="largest exact |X| for sample-walk")

    parser = argparse.ArgumentParser(prog="heavypoly", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"heavypoly {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "sample-walk": "draw increments and partial sums",
        "entropy-check": "classify and bracket the walk entropy",
        "free-energy": "estimate p(beta) = mean(log W_N) / N",
        "mean-w": "Monte Carlo mean of W_N",
        "martingale-check": "exact conditional-expectation check of W_n",
        "size-bias-test": "size-biased W_N detector table",
        "coarse-grain-demo": "dyadic search and assembled lower bound",
        "order-stats": "extreme events B, C, D or the uniform identity",
        "lemma-a1": "tilted-law limits on a beta grid",
        "condition-c": "ratio test of the second-maximum condition",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


_NON_CONFIG = {"subcommand", "config", "dry_run"}


# ---------------------------------------------------------------------------
# subcommands; each returns a list of row dicts
# ---------------------------------------------------------------------------

def _law_label(law) -> str:
    if law.is_nearest_neighbor:
        return "nearest_neighbor"
    return f"{law.family}({law.param:g})"


def _env_label(env) -> str:
    cfg = env.to_config()
    rest = ",".join(f"{k}={v}" for k, v in cfg.items() if k != "variant")
    return f"{cfg['variant']}({rest})" if rest else cfg["variant"]


def _cmd_sample_walk(c):
    law = build_law(c)
    rng = np.random.default_rng(_kernels.mix64(c["seed"], 0x57))
    rows = []
    pos: Optional[int] = 0
    for k in range(1, c["n_steps"] + 1):
        x = law.sample_exact(rng, cap=c["cap"])
        if x is Overflow:
            pos = None
            rows.append({"step": k, "x": None, "overflow": True, "S": None})
        else:
            pos = None if pos is None else pos + x
            rows.append({"step": k, "x": x, "overflow": False, "S": pos})
    return rows


def _cmd_entropy(c):
    law = build_law(c)
    res = law.entropy(tol=1e-4)
    row = {"family": law.family}
    row.update({k: v for k, v in law.to_config().items() if k != "family"})
    row.update({
        "status": "Finite" if res.finite else "Divergent",
        "value": res.value,
        "lower": res.lower,
        "upper": res.upper,
        "width": res.width,
    })
    return [row]


def _polymer_rows(c, estimator):
    law, env = build_law(c), build_env(c)
    rows = []
    for beta in c["beta"]:
        for n in c["N"]:
            cfg = partition.PolymerConfig(beta, n, c["M"], law, env, c["seed"])
            est, se = estimator(cfg, c["replicas"], c["workers"])
            _, lost = partition.truncated_kernel(law, c["M"])
            rows.append({
                "beta": beta, "N": n, "M": c["M"], "family": _law_label(law), "env": _env_label(env),
                "replicas": c["replicas"], "estimate": est, "stderr": se, "mass_loss": lost,
            })
    return rows


def _cmd_free_energy(c):
    return _polymer_rows(c, partition.free_energy_gap)


def _cmd_mean_w(c):
    return _polymer_rows(c, partition.mean_W_mc)


def _cmd_martingale(c):
    law, env = build_law(c), build_env(c)
    rows = []
    for beta in c["beta"]:
        for n in c["N"]:
            cfg = partition.PolymerConfig(beta, n, c["M"], law, env, c["seed"])
            reps = max(1, min(c["replicas"], 64))
            worst = partition.martingale_check(cfg, reps)
            rows.append({"beta": beta, "N": n, "M": c["M"], "replicas": reps,
                         "max_discrepancy": worst})
    return rows


def _cmd_size_bias(c):
    law, env = build_law(c), build_env(c)
    ent = law.entropy(tol=1e-4) if not law.entropy_diverges else None
    rows = []
    for beta in c["beta"]:
        res = size_bias.birkner_detector(
            lambda n: partition.PolymerConfig(beta, n, max(c["M"], n), law, env, c["seed"]),
            c["N_grid"], c["L"], c["replicas"], c["workers"])
        h = size_bias.h_beta(law, env, beta)
        for r in res.rows:
            rows.append({
                "beta": beta, "N": r.N, "L": r.L, "fraction": r.fraction, "stderr": r.stderr,
                "h_beta": h, "entropy": ent.value if ent else math.inf,
                "excess": env.excess(beta), "classification": res.classification[r.L],
            })
    return rows


def _cmd_coarse_grain(c):
    law, env = build_law(c), build_env(c)
    rows = []
    for beta in c["beta"]:
        for n in c["N"]:
            res = coarse_grain.coarse_grain_pipeline(law, env, beta, n, c["samples"], c["epsilon"],
                                                     seed=_kernels.mix64(c["seed"], n))
            rows.append({
                "N": n, "beta": beta, "eta": res.stats.eta, "n0": res.stats.n0,
                "p_eta": res.stats.p_eta_hat, "stderr": res.stats.p_eta_se, "PAN": res.PAN,
                "epsilon": res.epsilon, "bound": res.bound,
            })
    return rows


def _cmd_order_stats(c):
    rng = np.random.default_rng(_kernels.mix64(c["seed"], 0x05))
    if c["identity_n"] is not None:
        f, se, target = order_stats.uniform_tau_identity(c["identity_n"], c["replicas"], rng)
        return [{"n": c["identity_n"], "replicas": c["replicas"], "freq": f, "stderr": se,
                 "target": target}]
    law = build_law(c)
    table = order_stats.run_extremes(law, c["n_max"], c["K"], c["replicas"], rng)
    growth = order_stats.growth_witness(law, c["K"], c["n_max"], c["replicas"], c["n_min"], rng)
    rows = []
    for r in table.rows():
        r["onset_median"] = growth.onset_median
        rows.append(r)
    return rows


def _cmd_lemma_a1(c):
    env = build_env(c)
    res = lemma_a1_diagnostics(env, c["beta_grid"], c["threshold"])
    return [dict(r, ess_sup=res["ess_sup"], target_excess=res["target_excess"],
                 monotone=res["monotone"]) for r in res["rows"]]


def _cmd_condition_c(c):
    law = build_law(c)
    rows = []
    for n in c["n"]:
        s = law.s_n(n)
        ratio, ok = law.condition_c_ratio(n, c["gamma"])
        rows.append({
            "n": n, "s_n": s if isinstance(s, int) else None,
            "ln_s_n": math.log(s) if isinstance(s, int) else float(s.lnmag),
            "ratio": ratio, "n_pow_minus_gamma": n ** (-c["gamma"]), "holds": bool(ok),
        })
    return rows


COMMANDS = {
    "sample-walk": _cmd_sample_walk,
    "entropy-check": _cmd_entropy,
    "free-energy": _cmd_free_energy,
    "mean-w": _cmd_mean_w,
    "martingale-check": _cmd_martingale,
    "size-bias-test": _cmd_size_bias,
    "coarse-grain-demo": _cmd_coarse_grain,
    "order-stats": _cmd_order_stats,
    "lemma-a1": _cmd_lemma_a1,
    "condition-c": _cmd_condition_c,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _plain(v):
    if isinstance(v, LogMagnitude):
        return float(v.lnmag)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if not math.isfinite(v):
            return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return v
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _render(rows: List[Dict[str, Any]], fmt: str) -> str:
    rows = [{k: _plain(v) for k, v in r.items()} for r in rows]
    if fmt == "jsonl":
        return "".join(json.dumps(r) + "\n" for r in rows)
    buf = io.StringIO()
    header: List[str] = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def run(argv: Optional[Iterable[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:  # argparse already printed usage
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    cli_cfg = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        diags = validate({**file_cfg, **{k: v for k, v in cli_cfg.items() if v is not None}},
                         args.subcommand)
        errors = [d for d in diags if d.level == "error"]
        if errors or args.dry_run:
            for d in diags:
                print(d, file=sys.stderr)
            return EXIT_CONFIG if errors else EXIT_OK
        cfg = resolve(file_cfg, cli_cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        rows = COMMANDS[args.subcommand](cfg)
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    dig = digest(cfg, args.subcommand)
    stamped = [dict(r, seed=cfg["seed"], config_digest=dig, version=__version__) for r in rows]
    text = _render(stamped, cfg["format"])
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
        meta = {
            "subcommand": args.subcommand,
            "config": {k: _plain(v) if not isinstance(v, list) else [_plain(x) for x in v]
                       for k, v in cfg.items()},
            "config_digest": dig,
            "version": __version__,
            "backend": _kernels.BACKEND,
            "started": started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "rows": len(stamped),
        }
        with open(cfg["out"] + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
