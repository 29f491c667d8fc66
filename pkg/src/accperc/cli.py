"""Command-line front end.

Exit codes: 0 success, 1 usage/config error, 2 feasibility-guard rejection,
3 verification-suite failure.  Output is plain ``key=value`` lines with
``#``-prefixed metadata so the same stream stays machine-parseable;
identical invocations print identical payloads (nothing time-dependent is
ever emitted).  The default worker count can be set with the
``ACCPERC_WORKERS`` environment variable; the ``--workers`` flag overrides.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .errors import ConfigError, SizeExceededError
from .experiments import (
    SweepConfig,
    run_level_experiment,
    run_regime_sweep,
    run_sweep,
    write_results,
)
from .model import ModelParams
from .moments import moment_report
from .oracle import estimate_exist_prob_bruteforce, path_count_sample
from .sampler import LevelConfig, TrialConfig
from .stats import TrialEstimate
from . import experiments, sampler
from .verification import run_verification_suite, suite_passed

USAGE_EXIT = 1
GUARD_EXIT = 2
VERIFY_EXIT = 3

_CONFIG_KEYS = {
    "alpha_grid", "h_grid", "eps", "trials", "seed", "mode", "z", "workers",
}

_CONFIG_DEFAULTS = {"trials": 10_000, "seed": 0, "eps": 0.0, "mode": "exists",
                    "z": 1.96, "workers": None}


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _default_workers() -> int:
    raw = os.environ.get("ACCPERC_WORKERS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def load_config(path: str | Path) -> tuple[dict, list[str]]:
    """Parse a flat ``key = value`` sweep config file.

    Returns the raw key/value mapping (grids as tuples) plus the list of
    keys that fell back to defaults, for the output header.
    """
    values: dict = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key == "alpha_grid":
                values[key] = tuple(float(v) for v in val.split(","))
            elif key == "h_grid":
                values[key] = tuple(int(v) for v in val.split(","))
            elif key in ("eps", "z"):
                values[key] = float(val)
            elif key in ("trials", "seed", "workers"):
                values[key] = int(val)
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    defaulted = [k for k, v in _CONFIG_DEFAULTS.items()
                 if k not in values and v is not None]
    for key, val in _CONFIG_DEFAULTS.items():
        if val is not None:
            values.setdefault(key, val)
    return values, defaulted


def _build_parser() -> _Parser:
    parser = _Parser(prog="accperc",
                     description="Accessibility percolation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, trials=True):
        if trials:
            p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="lazy Monte Carlo existence estimate")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--alpha", type=float)
    group.add_argument("--n", type=int)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    add_common(p)
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("--coupled", type=int, metavar="NMAX")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("enumerate", help="exact full-tree brute force")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    add_common(p)

    p = sub.add_parser("moments", help="closed-form moment report")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)

    p = sub.add_parser("sweep", help="grid sweep to CSV/JSON")
    p.add_argument("--config", type=str)
    p.add_argument("--alpha-grid", type=str)
    p.add_argument("--h-grid", type=str)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("levels", help="banded level-count experiment")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    add_common(p)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("regime", help="near-critical sweep with classifier")
    p.add_argument("--beta", type=str, required=True,
                   help="expression in h, e.g. 'log(h)**2/h' or '0'")
    p.add_argument("--h-min", type=int, required=True)
    p.add_argument("--h-max", type=int, required=True)
    add_common(p)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--thorough", action="store_true")
    p.add_argument("--seed", type=int, default=20260809)
    p.add_argument("--out", type=str, help="write the JSON report here")

    return parser


def _num(x: float) -> str:
    """12-significant-digit value that still reads as a float (1 -> 1.0)."""
    text = f"{x:.12g}"
    return text if any(c in text for c in ".en") else text + ".0"


def _emit_estimate(prefix: str, est: TrialEstimate) -> None:
    print(f"successes={est.successes}")
    print(f"trials={est.trials}")
    print(f"p_hat={_num(est.p_hat)}")
    print(f"ci_lo={_num(est.ci_lo)}")
    print(f"ci_hi={_num(est.ci_hi)}")


def _cmd_simulate(args) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    h = args.height
    n = args.n if args.n is not None else math.floor(args.alpha * h)
    if n < 1:
        print("# infeasible: n < 1", file=sys.stderr)
        return GUARD_EXIT
    params = ModelParams(n=n, h=h, eps=args.eps)
    print(f"# accperc simulate n={n} h={h} eps={args.eps} trials={args.trials} "
          f"seed={args.seed} workers={workers}")
    if args.coupled is not None:
        if args.coupled < n:
            print(f"# --coupled must be >= n={n}", file=sys.stderr)
            return USAGE_EXIT
        ns = list(range(1, args.coupled + 1))
        ind = sampler.coupled_exists_batch(h, ns, args.trials, args.seed)
        for j, nn in enumerate(ns):
            est = TrialEstimate.from_counts(int(ind[:, j].sum()), args.trials)
            print(f"n={nn} p_hat={_num(est.p_hat)} ci_lo={_num(est.ci_lo)} "
                  f"ci_hi={_num(est.ci_hi)}")
        return 0
    mode = "restricted_exists" if args.eps > 0 else "exists"
    cfg = TrialConfig(params=params, cap=args.cap, mode=mode)
    successes = experiments._success_count(cfg, args.trials, args.seed, workers)
    _emit_estimate("simulate", TrialEstimate.from_counts(successes, args.trials))
    return 0


def _cmd_enumerate(args) -> int:
    params = ModelParams(n=args.n, h=args.height, eps=args.eps)
    print(f"# accperc enumerate n={args.n} h={args.height} eps={args.eps} "
          f"trials={args.trials} seed={args.seed}")
    est = estimate_exist_prob_bruteforce(params, args.trials, args.seed)
    _emit_estimate("enumerate", est)
    stats_n, stats_r = path_count_sample(params, args.trials, args.seed, args.eps)
    print(f"mean_paths={stats_n.mean:.12g}")
    print(f"sem_paths={stats_n.sem:.12g}")
    print(f"mean_restricted={stats_r.mean:.12g}")
    print(f"sem_restricted={stats_r.sem:.12g}")
    return 0


def _cmd_moments(args) -> int:
    rep = moment_report(args.alpha, args.height, args.eps)
    print(f"# accperc moments alpha={args.alpha} h={args.height} eps={args.eps}")
    print(f"n={rep.n}")
    print(f"alpha_effective={rep.alpha_effective:.12g}")
    print(f"log_expected_paths={rep.log_expected_paths:.12g}")
    if rep.expected_paths_exact is not None:
        print(f"expected_paths_exact={float(rep.expected_paths_exact):.12g}")
    print(f"stirling_bracket=({rep.stirling_lo}, {rep.stirling_hi})")
    print(f"log_mean_bracket_lo={rep.log_mean_bracket[0]:.12g}")
    print(f"log_mean_bracket_hi={rep.log_mean_bracket[1]:.12g}")
    print(f"log_restricted_mean_lower={rep.log_restricted_mean_lower:.12g}")
    if rep.log_second_moment_upper is not None:
        print(f"log_second_moment_upper={rep.log_second_moment_upper:.12g}")
        print(f"pz_lower={rep.pz_lower:.12g}")
        print(f"log_growth_rate={rep.log_growth_rate:.12g}")
    else:
        print("# subcritical at this eps: second-moment bound and "
              "Paley-Zygmund value undefined")
    print(f"markov_bound={rep.markov_bound:.12g}")
    return 0


def _parse_grid(text: str, cast):
    return tuple(cast(v) for v in text.split(","))


def _cmd_sweep(args) -> int:
    values: dict = {}
    defaulted: list[str] = []
    if args.config:
        values, defaulted = load_config(args.config)
    if args.alpha_grid is not None:
        values["alpha_grid"] = _parse_grid(args.alpha_grid, float)
    if args.h_grid is not None:
        values["h_grid"] = _parse_grid(args.h_grid, int)
    for key, flag in (("eps", args.eps), ("trials", args.trials),
                      ("seed", args.seed), ("workers", args.workers)):
        if flag is not None:
            values[key] = flag
    if "alpha_grid" not in values or "h_grid" not in values:
        print("accperc sweep: error: alpha_grid and h_grid are required "
              "(flags or config file)", file=sys.stderr)
        return USAGE_EXIT
    workers = values.get("workers")
    if workers is None:
        workers = _default_workers()
    cfg = SweepConfig(
        alpha_grid=tuple(values["alpha_grid"]),
        h_grid=tuple(values["h_grid"]),
        eps=values.get("eps", 0.0),
        trials_per_point=values.get("trials", 10_000),
        master_seed=values.get("seed", 0),
        mode=values.get("mode", "exists"),
        z=values.get("z", 1.96),
        workers=workers,
    )
    for key in defaulted:
        print(f"# default applied: {key}={_CONFIG_DEFAULTS[key]}")
    rows = run_sweep(cfg)
    write_results(rows, args.format, args.out)
    print(f"# wrote {len(rows)} rows to {args.out} ({args.format})")
    infeasible = sum(1 for r in rows if not r.feasible)
    if infeasible:
        print(f"# {infeasible} infeasible points flagged (trials=0)")
    return 0


def _cmd_levels(args) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    params = ModelParams(n=args.n, h=args.height)
    lc = LevelConfig(levels=args.levels, width_eps=args.eps)
    exp = run_level_experiment(params, lc, args.trials, args.seed, workers)
    print(f"# accperc levels n={args.n} h={args.height} J={args.levels} "
          f"eps={args.eps} trials={args.trials} seed={args.seed}")
    for j in range(exp.levels):
        print(f"level={j + 1} mean={exp.means[j]:.12g} sem={exp.sems[j]:.12g} "
              f"expected={exp.expected[j]:.12g}")
    print(f"shortfall_threshold={exp.shortfall_threshold:.12g}")
    print(f"shortfall_rate={exp.shortfall_rate:.12g}")
    print(f"shortfall_bound={exp.shortfall_bound:.12g}")
    if exp.bound_clamped:
        print("# shortfall bound clamped to 1 at this scale: the domination "
              "check is vacuously satisfied")
    return 0


def _beta_fn_from_expr(expr: str):
    names = {
        "log": math.log, "sqrt": math.sqrt, "exp": math.exp, "e": math.e,
        "pi": math.pi, "pow": math.pow,
    }
    code = compile(expr, "<beta>", "eval")
    for name in code.co_names:
        if name not in names and name != "h":
            raise ConfigError(f"--beta may only use h, log, sqrt, exp, e, pi, "
                              f"pow; got {name!r}")

    def beta(h: int) -> float:
        return float(eval(code, {"__builtins__": {}}, dict(names, h=h)))

    return beta


def _cmd_regime(args) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    if args.h_min < 2 or args.h_max < args.h_min:
        print("accperc regime: error: need 2 <= h-min <= h-max", file=sys.stderr)
        return USAGE_EXIT
    beta = _beta_fn_from_expr(args.beta)
    h_grid = list(range(args.h_min, args.h_max + 1))
    res = run_regime_sweep(h_grid, beta, args.trials, args.seed, workers=workers)
    print(f"# accperc regime beta={args.beta!r} h={args.h_min}..{args.h_max} "
          f"trials={args.trials} seed={args.seed}")
    print("# h n eps p_hat ci_lo ci_hi markov_bound")
    for row in res.rows:
        print(f"h={row.h} n={row.n} eps={row.eps:.6g} p_hat={row.p_hat:.12g} "
              f"ci_lo={row.ci_lo:.12g} ci_hi={row.ci_hi:.12g} "
              f"markov_bound={row.markov_bound:.12g}")
    print(f"verdict={res.classification.verdict}")
    print(f"# {res.classification.note}")
    return 0


def _cmd_verify(args) -> int:
    budget = "thorough" if args.thorough else "quick"
    results = run_verification_suite(budget=budget, seed=args.seed)
    print(f"# accperc verify budget={budget} seed={args.seed}")
    for r in results:
        print(f"{r.check_name}: {r.status.upper()} (measured={r.measured}, "
              f"tolerance={r.tolerance}) {r.details}")
    passed = suite_passed(results)
    print(f"# {sum(r.passed for r in results)}/{len(results)} checks passed")
    if args.out:
        import json
        Path(args.out).write_text(
            json.dumps([r.to_json_obj() for r in results], indent=2) + "\n"
        )
        print(f"# report written to {args.out}")
    return 0 if passed else VERIFY_EXIT


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    handlers = {
        "simulate": _cmd_simulate,
        "enumerate": _cmd_enumerate,
        "moments": _cmd_moments,
        "sweep": _cmd_sweep,
        "levels": _cmd_levels,
        "regime": _cmd_regime,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except SizeExceededError as exc:
        print(f"accperc {args.command}: size guard: {exc}", file=sys.stderr)
        return GUARD_EXIT
    except ConfigError as exc:
        print(f"accperc {args.command}: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ValueError as exc:
        print(f"accperc {args.command}: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
