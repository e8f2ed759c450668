"""Command-line interface.

Exit codes: 0 success, 2 usage or invalid argument, 3 schema error,
4 missing columns, 5 dimension mismatch, 6 training failure or infeasible
targets, 7 file-system error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__, benchmark, datagen, formats, oracle
from .core import NoncoverageTargets, TheoryParams
from .errors import (
    DimensionError, InfeasibleError, InvalidArgumentError, MissingColumnsError, NumericalError, SchemaError,
    TrainingError,
)
from .inference import Thresholds, evaluate_scores, robust_thresholds
from .kernel import KernelSpec
from .trainer import TrainConfig, fit_csvm, lam_prime_from_lambda
from .tuning import default_kernel_grid, grid_search, tune_knn

log = logging.getLogger("csvm")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_MISSING = 4
EXIT_DIMENSION = 5
EXIT_TRAINING = 6
EXIT_IO = 7

# most specific first: MissingColumnsError is a SchemaError
_EXIT_CODES = (
    (MissingColumnsError, EXIT_MISSING),
    (SchemaError, EXIT_SCHEMA),
    (DimensionError, EXIT_DIMENSION),
    (InfeasibleError, EXIT_TRAINING),
    (TrainingError, EXIT_TRAINING),
    (NumericalError, EXIT_TRAINING),
    (InvalidArgumentError, EXIT_USAGE),
    (OSError, EXIT_IO),
)


def exit_code_for(exc):
    for cls, code in _EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return None


def _targets(args):
    return NoncoverageTargets(args.alpha_neg, args.alpha_pos)


def _emit(record):
    print(json.dumps(formats._clean(record), sort_keys=True))


# -- simulate --------------------------------------------------------------

def cmd_simulate(args):
    os.makedirs(args.out_dir, exist_ok=True)
    written = {}
    sizes = (("train", args.n_train), ("tune", args.n_tune), ("test", args.n_test))
    for split, n in sizes:
        if n == 0:
            continue
        stream = [args.repeat, benchmark.SPLITS[split]]
        data = datagen.generate(args.scenario, n, args.p, args.seed, *stream)
        meta = formats.tool_meta(seed=args.seed, scenario=args.scenario, split=split, n=n, p=args.p, stream=stream)
        path = os.path.join(args.out_dir, f"{args.prefix}{split}.csv")
        formats.write_dataset(path, data, meta)
        written[split] = {"path": path, "n": n, "n_neg": data.n_neg, "n_pos": data.n_pos}
    _emit(formats.tool_meta(command="simulate", seed=args.seed, repeat=args.repeat, scenario=args.scenario, p=args.p,
                            files=written))
    return EXIT_OK


# -- train -----------------------------------------------------------------

def _lam_prime(args, n):
    if args.lam_prime is not None:
        return args.lam_prime
    return lam_prime_from_lambda(args.lam, n)


def cmd_train(args):
    train, _ = formats.read_dataset(args.train)
    targets = _targets(args)
    config = TrainConfig(lam_prime=_lam_prime(args, train.n), targets=targets, kernel=KernelSpec.parse(args.kernel),
                         adaptive=not args.no_adaptive, max_outer_iters=args.max_outer_iters, seed=args.seed)
    model, trace = fit_csvm(train, config)
    thresholds, source = Thresholds.from_margin(model.epsilon), "margin"
    if args.tune:
        tune, _ = formats.read_dataset(args.tune, expected_p=train.p)
        thresholds, source = robust_thresholds(model.decision_function(tune.features), tune.labels, targets), "robust"
    formats.write_model(args.out, model, thresholds, config.to_dict(), args.seed,
                        {"threshold_source": source, "converged": trace.converged})
    last = trace.records[-1]
    _emit(formats.tool_meta(command="train", model=args.out, config=config.to_dict(), epsilon=model.epsilon,
                            intercept=model.intercept, thresholds={"t_neg": thresholds.t_neg, "t_pos": thresholds.t_pos},
                            outer_iterations=len(trace.records), converged=trace.converged,
                            constraint_neg=last.constraint_neg, constraint_pos=last.constraint_pos))
    return EXIT_OK


# -- evaluate --------------------------------------------------------------

def _oracle_spec(args, p):
    spec = oracle.BayesSpec(args.oracle, noise_dims=max(0, p - 2), mc_samples=args.mc_samples, seed=args.seed)
    return oracle.bayes_thresholds(spec, _targets(args))


def cmd_evaluate(args):
    test, _ = formats.read_dataset(args.test)
    targets = _targets(args)
    if args.oracle:
        if test.p < 2:
            raise DimensionError("the oracle needs at least the two signal columns")
        spec = _oracle_spec(args, test.p)
        scores = oracle.eta(spec, test.features)
        thresholds = spec.thresholds
        source = {"oracle": args.oracle, "mc_samples": args.mc_samples, "seed": args.seed}
    else:
        model, thresholds, head = formats.read_model(args.model)
        if test.p != model.p:
            raise DimensionError(f"model expects {model.p} features, test data has {test.p}")
        if thresholds is None:
            raise SchemaError(f"{args.model}: model file carries no thresholds")
        scores = model.decision_function(test.features)
        source = {"model": args.model, "method": head["method"], "config": head.get("config")}
    report = evaluate_scores(scores, test.labels, thresholds, targets)
    record = formats.tool_meta(command="evaluate", test=args.test, alpha_neg=targets.alpha_neg,
                               alpha_pos=targets.alpha_pos, seed=args.seed, source=source,
                               thresholds={"t_neg": thresholds.t_neg, "t_pos": thresholds.t_pos}, **report.to_dict())
    if args.report:
        formats.write_jsonl(args.report, [record])
    _emit(record)
    return EXIT_OK


# -- tune ------------------------------------------------------------------

def cmd_tune(args):
    train, _ = formats.read_dataset(args.train)
    tune, _ = formats.read_dataset(args.tune, expected_p=train.p)
    targets = _targets(args)
    if args.method == "knn":
        res = tune_knn(train, tune, targets)
        cfg = res.config.to_dict()
    elif args.method == "logistic":
        res = grid_search(train, tune, targets, method="logistic")
        cfg = res.config.to_dict()
    else:
        res = grid_search(train, tune, targets, kernel_grid=default_kernel_grid(args.kernel),
                          adaptive=not args.no_adaptive)
        cfg = {**res.config.to_dict(), "lam": res.entry.param}
    formats.write_model(args.out, res.model, res.thresholds, cfg, args.seed,
                        {"threshold_source": "robust", "tuning_ambiguity": res.entry.ambiguity})
    if args.trace:
        head = formats.tool_meta(command="tune", seed=args.seed, method=args.method, selected=cfg)
        formats.write_jsonl(args.trace, [head] + [e.to_dict() for e in res.trace])
    _emit(formats.tool_meta(command="tune", model=args.out, method=args.method, config=cfg,
                            tuning_ambiguity=res.entry.ambiguity, candidates=len(res.trace),
                            thresholds={"t_neg": res.thresholds.t_neg, "t_pos": res.thresholds.t_pos}))
    return EXIT_OK


# -- benchmark -------------------------------------------------------------

def cmd_benchmark(args):
    config = benchmark.BenchmarkConfig(
        scenario=args.scenario, n_train=tuple(args.n_train), n_tune=args.n_tune, n_test=args.n_test, p=args.p,
        alpha_neg=args.alpha_neg, alpha_pos=args.alpha_pos, repeats=args.repeats, seed=args.seed,
        methods=tuple(args.methods), kernel=args.kernel, adaptive=not args.no_adaptive,
        mc_samples=args.mc_samples, oracle=not args.no_oracle)
    jobs = args.jobs if args.jobs is not None else benchmark.default_jobs()
    result = benchmark.run_benchmark(config, jobs=jobs)
    os.makedirs(args.out_dir, exist_ok=True)
    meta = formats.tool_meta(command="benchmark", seed=config.seed, config=config.to_dict())
    head = {"record": "meta", **meta}
    rows = [{"record": "repeat", **r} for r in result.rows]
    aggs = [{"record": "aggregate", **a} for a in result.aggregates]
    tail = []
    if result.oracle_mc is not None:
        tail.append({"record": "oracle_mc", "thresholds": result.bayes_thresholds, **result.oracle_mc})
    paths = {k: os.path.join(args.out_dir, v) for k, v in
             (("rows", "rows.jsonl"), ("aggregate", "aggregate.jsonl"), ("plot", "plot.csv"))}
    formats.write_jsonl(paths["rows"], [head] + rows)
    formats.write_jsonl(paths["aggregate"], [head] + aggs + tail)
    formats.write_plot_csv(paths["plot"], benchmark.plot_rows(result.aggregates), meta)
    _emit({"command": "benchmark", "files": paths, "aggregate": result.aggregates, "oracle_mc": result.oracle_mc})
    return EXIT_OK


# -- oracle and bounds -----------------------------------------------------

def cmd_oracle(args):
    targets = _targets(args)
    spec = oracle.bayes_thresholds(
        oracle.BayesSpec(args.scenario, noise_dims=max(0, args.p - 2), mc_samples=args.mc_samples, seed=args.seed),
        targets)
    record = formats.tool_meta(command="oracle", scenario=args.scenario, seed=args.seed, mc_samples=args.mc_samples,
                               alpha_neg=targets.alpha_neg, alpha_pos=targets.alpha_pos,
                               t_neg=spec.t_neg, t_pos=spec.t_pos, ordering_holds=spec.satisfies_ordering())
    if args.eval_samples:
        rep, counts = oracle.bayes_mc_evaluation(spec, args.eval_samples, targets)
        record.update(evaluation={**rep.to_dict(), "n_neg": counts[0], "n_pos": counts[1]})
    if args.point is not None:
        x = [float(v) for v in args.point.split(",")]
        record.update(point=x, eta=oracle.eta(spec, x), prediction=oracle.bayes_predict(spec, x).name)
    _emit(record)
    return EXIT_OK


def cmd_bound(args):
    theory = TheoryParams(args.s, args.r, args.c, args.zeta)
    consts = oracle.theory_constants(theory)
    record = {"command": "bound", "s": args.s, "r": args.r, "c": args.c, "zeta": args.zeta,
              "c_prime": consts.c_prime, "kappa": consts.kappa}
    if args.n_j is not None:
        record.update(n_j=args.n_j, empirical=args.empirical,
                      noncoverage_bound=oracle.noncoverage_bound(theory, args.n_j, args.empirical))
    _emit(record)
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _add_targets(p):
    p.add_argument("--alpha-neg", type=float, default=0.05, help="non-coverage target for class -1")
    p.add_argument("--alpha-pos", type=float, default=0.05, help="non-coverage target for class +1")


def build_parser():
    parser = argparse.ArgumentParser(prog="csvm", description="Confidence-set SVM toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write train/tune/test CSVs for a synthetic scenario")
    p.add_argument("--scenario", choices=datagen.SCENARIOS, required=True)
    p.add_argument("--n-train", type=_nonneg_int, default=400)
    p.add_argument("--n-tune", type=_nonneg_int, default=400)
    p.add_argument("--n-test", type=_nonneg_int, default=20000)
    p.add_argument("--p", type=int, default=10, help="total dimension, including the two signal columns")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--repeat", type=_nonneg_int, default=0,
                   help="repeat index; the files match that repeat of a benchmark with the same seed")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="", help="file name prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit a CSVM with a fixed penalty")
    p.add_argument("--train", required=True)
    p.add_argument("--tune", help="tuning CSV; when given the thresholds are calibrated on it")
    pen = p.add_mutually_exclusive_group()
    pen.add_argument("--lam", type=float, default=0.01, help="penalty of the averaged-loss form")
    pen.add_argument("--lam-prime", type=float, help="penalty of the scaled form (overrides --lam)")
    p.add_argument("--kernel", default="linear", help="linear, gaussian:RHO or poly:DEGREE")
    p.add_argument("--no-adaptive", action="store_true", help="single fit with unit weights")
    p.add_argument("--max-outer-iters", type=_positive_int, default=5)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    _add_targets(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a model file or a Bayes oracle on a test CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--oracle", choices=datagen.SCENARIOS, help="use the Bayes rule of a synthetic scenario")
    p.add_argument("--test", required=True)
    p.add_argument("--report", help="JSON-lines report file")
    p.add_argument("--mc-samples", type=_positive_int, default=oracle.DEFAULT_MC_SAMPLES)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    _add_targets(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune", help="grid search on train/tune CSVs and write the selected model")
    p.add_argument("--train", required=True)
    p.add_argument("--tune", required=True)
    p.add_argument("--method", choices=benchmark.ALL_METHODS, default="csvm")
    p.add_argument("--kernel", choices=("linear", "gaussian", "polynomial"), default="linear",
                   help="kernel family searched by csvm")
    p.add_argument("--no-adaptive", action="store_true")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="JSON-lines file for the search trace")
    _add_targets(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("benchmark", help="repeat the tune-then-test protocol on a synthetic scenario")
    p.add_argument("--scenario", choices=datagen.SCENARIOS, default="example1")
    p.add_argument("--n-train", type=_positive_int, nargs="+", default=[400])
    p.add_argument("--n-tune", type=_positive_int, help="default: equal to each n-train")
    p.add_argument("--n-test", type=_positive_int, default=20000)
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--repeats", type=_positive_int, default=20)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--methods", nargs="+", choices=benchmark.ALL_METHODS, default=list(benchmark.ALL_METHODS))
    p.add_argument("--kernel", choices=("linear", "gaussian", "polynomial"), default="linear")
    p.add_argument("--no-adaptive", action="store_true")
    p.add_argument("--mc-samples", type=_positive_int, default=oracle.DEFAULT_MC_SAMPLES)
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--jobs", type=_positive_int, help=f"worker processes (default: ${benchmark.JOBS_ENV} or 1)")
    p.add_argument("--out-dir", default=".")
    _add_targets(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("oracle", help="Bayes thresholds of a synthetic scenario")
    p.add_argument("--scenario", choices=datagen.SCENARIOS, required=True)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--mc-samples", type=_positive_int, default=oracle.DEFAULT_MC_SAMPLES)
    p.add_argument("--eval-samples", type=_nonneg_int, default=0, help="fresh draws for a Monte-Carlo evaluation")
    p.add_argument("--point", help="comma-separated point to classify")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    _add_targets(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bound", help="finite-sample bound and theory constants")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--zeta", type=float, default=0.05)
    p.add_argument("--n-j", type=_positive_int)
    p.add_argument("--empirical", type=float, default=0.0)
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # mapped to documented exit codes
        code = exit_code_for(exc)
        if code is None:
            raise
        print(f"csvm {args.command}: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
