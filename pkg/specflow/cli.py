"""Specflow CLI: spectral experiments for special flows over rotations."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .birkhoff import (LAMBDA_COUNT, LAMBDA_MAX, PASS, REFUTED, BirkhoffPlan, birkhoff_closeness, delta_n,
                       lambda_grid, lambda_representative, make_multi_frequency_plan, make_return_plan,
                       make_single_frequency_plan, phase_defect_integral, range_derivative_measure,
                       range_threshold_lambda, weak_mixing_certificate)
from .cohomology import (DISCRETE, UNDECIDED, WM_MULTI, WM_SINGLE, Thresholds, classify, reduce_to_best_returns,
                         reduce_to_M, transfer_table, verify_cohomology_residual)
from .config import ExperimentConfig, apply_overrides, build_alpha, build_roof, env_log_level, load_config
from .diophantine import (best_return_check, class_M, convergent_table, exponential_approximation_profile,
                          good_returns, profile_trend)
from .errors import (ConfigError, InsufficientQuotients, InvalidQuotients, InvalidRoof, NonHermitianCoefficients,
                     PlanError, PrecisionExhausted, ReductionRefused)
from .lacunary_clt import (STATED_CONVENTION, birkhoff_to_lacunary, cosine_product_integral, distribution_table,
                           dyadic_rows, row_diagnostics, sample_row)
from .report import (alpha_summary, build_report, certificate_summary, clt_summary, emit, hypotheses_summary,
                     verdict_summary, write_timings)
from .roof import c3_proxy, check_hypotheses, positivity_certificate

logger = logging.getLogger(__name__)

VERDICT_CODES = {DISCRETE: 0, WM_SINGLE: 10, WM_MULTI: 11, UNDECIDED: 20}
CERTIFICATE_CODES = {PASS: 0, REFUTED: 1}
EXIT_CONFIG = 2
EXIT_PRECISION = 3
EXIT_PLAN = 4
RETURN_PLAN_INDICES = tuple(range(1, 17))
RETURN_PLAN_HORIZON = 64
WM_LAMBDA_MIN = 16.0
COSINE_PRODUCT_TS = (0.5, 1.0, 2.0)
DUMPED_SAMPLES = 10_000

Result = Tuple[dict, Dict[str, List[dict]], int]


class Timer:
    def __init__(self):
        self.timings: Dict[str, float] = {}

    def stage(self, name: str, func: Callable, *args, **kwargs):
        start = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            self.timings[name] = time.perf_counter() - start


def _pair(cfg: ExperimentConfig):
    alpha = build_alpha(cfg.alpha, cfg.precision_bits)
    return alpha, build_roof(cfg.roof, alpha)


def _thresholds(cfg: ExperimentConfig) -> Thresholds:
    t = cfg.thresholds
    return Thresholds(ratio_floor=t["ratio_floor"], hysteresis=t["hysteresis"], trend_window=int(t["trend_window"]),
                      l2_tolerance=t["l2_tolerance"], divergence_ratio=t["divergence_ratio"])


# ---------------------------------------------------------------------------
# Runners (config in, report out)
# ---------------------------------------------------------------------------

def run_alpha(cfg: ExperimentConfig, timer: Optional[Timer] = None) -> Result:
    """Convergents, good returns, class M and approximation profile."""
    timer = timer or Timer()
    alpha = build_alpha(cfg.alpha, cfg.precision_bits)
    rows = timer.stage("convergents", convergent_table, alpha, cfg.convergents)
    goods = timer.stage("good_returns", good_returns, alpha, min(cfg.horizon, cfg.scan_limit), cfg.scan_limit)
    members = timer.stage("class_M", class_M, alpha, cfg.horizon, cfg.scan_limit)
    checks = timer.stage("best_returns", best_return_check, alpha, cfg.convergents, cfg.scan_limit)
    profile = exponential_approximation_profile(alpha, cfg.convergents)
    results = {
        "alpha": alpha.label,
        "convergents": rows,
        "good_returns": [asdict(g) for g in goods],
        "class_M": [asdict(i) for i in members.members],
        "best_return_check": checks,
        "approximation_profile": profile,
        "profile_trend": profile_trend(profile),
    }
    print(alpha_summary(alpha.label, rows, members.frequencies))
    print(f"approximation profile: {results['profile_trend']}")
    tables = {"convergents": rows, "class_M": results["class_M"], "profile": profile}
    return results, tables, 0


def run_hypcheck(cfg: ExperimentConfig, timer: Optional[Timer] = None) -> Result:
    timer = timer or Timer()
    alpha, phi = _pair(cfg)
    hyp = timer.stage("hypotheses", check_hypotheses, phi, cfg.hypothesis_horizon)
    positivity = positivity_certificate(phi)
    proxy = c3_proxy(phi)
    results = {
        "roof": phi.to_config(),
        "hypotheses": hyp.to_dict(),
        "positivity": {**asdict(positivity), "lower_bound": positivity.lower_bound, "holds": positivity.holds},
        "c3_proxy": {**asdict(proxy), "holds": proxy.holds},
    }
    print(f"Hypotheses for {phi.kind} roof (horizon {cfg.hypothesis_horizon}):")
    print(hypotheses_summary(results["hypotheses"]))
    tables = {name: getattr(hyp, name).table for name in ("h1", "h2", "h3")}
    return results, tables, 0 if hyp.all_pass else 1


def run_classify(cfg: ExperimentConfig, timer: Optional[Timer] = None) -> Result:
    timer = timer or Timer()
    alpha, phi = _pair(cfg)
    hyp = timer.stage("hypotheses", check_hypotheses, phi, min(cfg.hypothesis_horizon, cfg.horizon))
    verdict = timer.stage("classify", classify, phi, alpha, cfg.horizon, _thresholds(cfg), hyp, cfg.dense_horizon)
    results = {"roof": phi.to_config(), "verdict": verdict.to_dict()}
    tables = {"ratios": verdict.ratio_table}
    if not phi.is_constant:
        tables["transfer"] = timer.stage("transfer", transfer_table, phi, alpha,
                                         min(cfg.horizon, cfg.dense_horizon), cfg.dense_horizon)
    if verdict.outcome == DISCRETE and not phi.is_constant and not (phi.is_finite and not phi.series_prefix):
        reduced = reduce_to_M(phi, alpha, min(cfg.horizon, cfg.dense_horizon), cfg.dense_horizon)
        residual = verify_cohomology_residual(phi, reduced, alpha)
        results["cohomology_residual"] = {**asdict(residual), "within_bound": residual.within_bound}
    print(verdict_summary(results["verdict"]))
    return results, tables, VERDICT_CODES[verdict.outcome]


def _lambdas(cfg: ExperimentConfig, outcome: str, c0: float, threshold: Optional[float] = None) -> List[float]:
    """Explicit list, configured grid, suspension eigenvalues, or LAMBDA_COUNT
    log-spaced values from the first λ with |λ|R_N > 4."""
    if isinstance(cfg.lambdas, list):
        return [float(v) for v in cfg.lambdas]
    if isinstance(cfg.lambdas, dict):
        return lambda_grid(cfg.lambdas.get("min", WM_LAMBDA_MIN), cfg.lambdas.get("max", LAMBDA_MAX),
                           int(cfg.lambdas.get("count", LAMBDA_COUNT)))
    if outcome == DISCRETE:
        # eigenvalues of the suspension with constant roof c_0
        return [k / c0 for k in range(1, 5)]
    lam_min = max(WM_LAMBDA_MIN, threshold or 0.0)
    return lambda_grid(lam_min, max(LAMBDA_MAX, 16 * lam_min), LAMBDA_COUNT)


def _build_plan(cfg, alpha, phi, verdict, hyp, lam) -> Tuple[BirkhoffPlan, object, Optional[object]]:
    """(plan, roof the certificate runs on, best-returns reduction or None)."""
    p = cfg.plan
    if verdict.outcome == DISCRETE:
        indices = p["indices"] or RETURN_PLAN_INDICES
        roof = phi if phi.is_finite and not phi.series_prefix else phi.truncate(RETURN_PLAN_HORIZON)
        return make_return_plan(alpha, lam, indices), roof, None
    members = class_M(alpha, cfg.horizon, cfg.scan_limit)
    reduced = reduce_to_M(phi, alpha, cfg.horizon, cfg.dense_horizon, members)
    if verdict.outcome == WM_SINGLE:
        plan = make_single_frequency_plan(alpha, verdict.subsequence, lam, p["count"])
        return plan, reduced.roof, None
    best = reduce_to_best_returns(reduced, alpha, hyp)
    plan = make_multi_frequency_plan(alpha, best, lam, p["variance_target"], p["slack"], p["start"])
    return plan, best.roof, best


def run_wmtest(cfg: ExperimentConfig, timer: Optional[Timer] = None) -> Result:
    timer = timer or Timer()
    alpha, phi = _pair(cfg)
    hyp = timer.stage("hypotheses", check_hypotheses, phi, min(cfg.hypothesis_horizon, cfg.horizon))
    verdict = timer.stage("classify", classify, phi, alpha, cfg.horizon, _thresholds(cfg), hyp, cfg.dense_horizon)
    results = {"roof": phi.to_config(), "verdict": verdict.to_dict()}
    if verdict.outcome == UNDECIDED:
        print(verdict_summary(results["verdict"]))
        print("no certificate for an undecided pair")
        return results, {"ratios": verdict.ratio_table}, 20
    if phi.is_constant:
        raise PlanError("constant roof has no Birkhoff fluctuations", hint="nothing to certify")

    c0 = float(phi.c0)
    plan, roof, best = timer.stage("plan", _build_plan, cfg, alpha, phi, verdict, hyp,
                                   _lambdas(cfg, verdict.outcome, c0)[0])
    threshold = None
    if plan.kind != "return":
        threshold = range_threshold_lambda(plan, roof, alpha, cfg.grid, np.random.default_rng(cfg.seed))
    lambdas = _lambdas(cfg, verdict.outcome, c0, threshold)
    plan = replace(plan, lam=lambdas[0])
    results["lambda_threshold"] = threshold
    results["plan"] = plan.to_dict()
    th = cfg.thresholds
    cert = timer.stage("certificate", weak_mixing_certificate, plan, roof, alpha, lambdas, cfg.grid,
                       th["criterion_tolerance"], th["pass_floor"], th["refute_ceiling"], cfg.seed)
    results["certificate"] = cert.to_dict()
    tables = {"criterion": cert.table(), "ratios": verdict.ratio_table}

    rng = np.random.default_rng(cfg.seed)
    if plan.kind == "single_frequency":
        lam = lambdas[0]
        rep = lambda_representative(roof, lam)
        estimates, closeness = [], []
        for step in plan.steps:
            if step.q not in rep.kept:
                continue
            est = range_derivative_measure(plan, step.n, rep.roof, alpha, lam, hyp.K1, hyp.K2, cfg.grid, rng)
            estimates.append(est.to_dict())
            closeness.append(birkhoff_closeness(plan, step.n, rep.roof, alpha, lam, cfg.grid, rng))
        results["range_estimates"] = estimates
        results["closeness"] = closeness
        tables["range"] = estimates
    elif plan.kind == "multi_frequency":
        rows = timer.stage("delta_n", delta_n, plan, roof, alpha, cfg.grid, rng)
        results["delta_n"] = rows
        results["lacunary_rows"] = birkhoff_to_lacunary(best, alpha, plan).check()
        tables["delta"] = [{k: v for k, v in r.items() if k != "delta_k"} for r in rows]
    else:
        rows = timer.stage("phase_defect", phase_defect_integral, plan, roof, alpha, cfg.grid, rng)
        results["phase_defect"] = rows
        tables["phase_defect"] = rows

    print(verdict_summary(results["verdict"]))
    print(certificate_summary(results["certificate"]))
    return results, tables, CERTIFICATE_CODES.get(cert.status, 20)


def _clt_array(cfg: ExperimentConfig):
    c = cfg.clt
    if c["source"] == "dyadic":
        return dyadic_rows(c["sizes"], c["total_variance"], cfg.seed, int(c["ratio"]))
    alpha, phi = _pair(cfg)
    members = class_M(alpha, cfg.horizon, cfg.scan_limit)
    reduced = reduce_to_M(phi, alpha, cfg.horizon, cfg.dense_horizon, members)
    best = reduce_to_best_returns(reduced, alpha)
    p = cfg.plan
    plan = make_multi_frequency_plan(alpha, best, 1.0, p["variance_target"], p["slack"], p["start"])
    return birkhoff_to_lacunary(best, alpha, plan)


def run_clt(cfg: ExperimentConfig, timer: Optional[Timer] = None) -> Result:
    timer = timer or Timer()
    arr = timer.stage("rows", _clt_array, cfg)
    t_max = float(cfg.clt["t_max"])
    t_grid = np.linspace(-t_max, t_max, 61)
    summaries = timer.stage("distributions", distribution_table, arr, cfg.samples, cfg.seed, t_grid)
    rows = []
    for s, row in zip(summaries, arr.rows):
        out = {**s.to_dict(), **{f"diag_{k}": v for k, v in row_diagnostics(row).items() if k != "u"}}
        if row.u <= 16:
            for t in COSINE_PRODUCT_TS:
                out[f"cosine_product_t{t:g}"] = abs(cosine_product_integral(row, 0, t) - 1)
        rows.append(out)
    valid = all(r["lacunary"] and r["normalized"] is not False and r["zero_representation"] for r in rows)
    results = {"source": cfg.clt["source"], "convention": STATED_CONVENTION, "rows": rows,
               "maxima_decreasing": arr.maxima_decreasing, "array": arr.to_dict()}
    tables = {"rows": rows}
    if cfg.clt["dump_samples"]:
        dump = []
        for n in range(len(arr.rows)):
            dist = sample_row(arr, n, max(DUMPED_SAMPLES, 1000), cfg.seed)
            dump += [{"n": n, "x": float(v)} for v in dist.samples[:DUMPED_SAMPLES]]
        tables["samples"] = dump
    print(clt_summary(rows))
    return results, tables, 0 if valid else 1


RUNNERS = {
    "alpha": run_alpha,
    "hypcheck": run_hypcheck,
    "classify": run_classify,
    "wmtest": run_wmtest,
    "clt": run_clt,
}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    return apply_overrides(cfg, precision_bits=args.precision, seed=args.seed, out=args.out, emit=args.emit)


def _run(command: str, args) -> int:
    cfg = _config(args)
    timer = Timer()
    results, tables, code = RUNNERS[command](cfg, timer)
    report = build_report(command, cfg.to_dict(), results)
    written = emit(report, tables, cfg.out, cfg.emit)
    write_timings(command, timer.timings, cfg.out)
    for path in written:
        logger.info(f"report: {path}")
    return code


def cmd_alpha(args):
    """Continued-fraction inspection of α."""
    return _run("alpha", args)


def cmd_hypcheck(args):
    """Check the coefficient hypotheses of the roof."""
    return _run("hypcheck", args)


def cmd_classify(args):
    """Place the pair on one side of the dichotomy."""
    return _run("classify", args)


def cmd_wmtest(args):
    """Build Birkhoff plans and run the weak-mixing certificate."""
    return _run("wmtest", args)


def cmd_clt(args):
    """Central limit behaviour of lacunary rows."""
    return _run("clt", args)


COMMANDS = {
    "alpha": cmd_alpha,
    "hypcheck": cmd_hypcheck,
    "classify": cmd_classify,
    "wmtest": cmd_wmtest,
    "clt": cmd_clt,
}


def _configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = "DEBUG"
    elif verbose == 1:
        level = "INFO"
    else:
        level = env_log_level()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="specflow",
        description="Spectral dichotomy experiments for special flows over circle rotations"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None, help="Path to a JSON experiment config")
    parser.add_argument("--precision", type=int, default=None, help="Working precision in bits")
    parser.add_argument("--seed", type=int, default=None, help="Random seed")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--emit", choices=["json", "csv", "both"], default=None, help="Output format")
    parser.add_argument("-v", "--verbose", action="count", default=0)

    subs = parser.add_subparsers(dest="command")
    subs.add_parser("alpha", help="Convergents, good returns and class M of α")
    subs.add_parser("hypcheck", help="Check the roof hypotheses")
    subs.add_parser("classify", help="Classify the (α, roof) pair")
    subs.add_parser("wmtest", help="Weak-mixing certificate along Birkhoff plans")
    subs.add_parser("clt", help="CLT diagnostics for lacunary rows")

    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    if not args.command:
        parser.print_help()
        return 0

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidQuotients, InvalidRoof, NonHermitianCoefficients) as e:
        logger.error(f"{args.command}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PrecisionExhausted as e:
        logger.error(f"{args.command}: {e}")
        print(f"Error: {e} (raise --precision above {e.precision_bits})", file=sys.stderr)
        return EXIT_PRECISION
    except PlanError as e:
        logger.error(f"{args.command}: {e}")
        hint = f" (hint: {e.hint})" if e.hint else ""
        print(f"Error: {e}{hint}", file=sys.stderr)
        return EXIT_PLAN
    except (InsufficientQuotients, ReductionRefused) as e:
        logger.error(f"{args.command}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_PLAN


if __name__ == "__main__":
    sys.exit(main() or 0)
