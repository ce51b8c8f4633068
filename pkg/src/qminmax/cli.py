"""Command-line entry point.

    qminmax eval --shape balanced:2:3 --backend ideal --seed 7
    qminmax recurrence --m-max 4
    qminmax convergence --n-list 16,64,256 --trials 100
    qminmax success --n 256 --epsilons 0,0.05 --c-factors 4,8 --trials 500
    qminmax scaling --n-list 64,256,1024 --trials 5 --backend grover
    qminmax gen --shape random:12 --seed 3 --out tree.json

Exit status: 0 on success, 1 on a runtime failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .errors import ConfigurationError, ContractViolation
from .evaluator import EvaluatorConfig, annotate_trace, evaluate, trace_to_jsonl
from .oracle import COMPARISON, INPUT_VALUE
from .subroutines import BACKENDS, BackendConfig
from .trees import dump_tree, eval_minmax, gen_tree, load_tree, parse_shape

OUT_DIR_ENV = "QMINMAX_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_backend_flags(p, default_c=None):
    p.add_argument("--backend", choices=BACKENDS, default="ideal")
    p.add_argument("--epsilon", type=float, default=None, help="per-call error rate (stochastic only)")
    p.add_argument("--c-factor", type=float, default=default_c, help="iterations = ceil(c * log2(N+1))")
    p.add_argument("--amp-reps", type=int, default=1, help="odd majority-vote repetitions per decision")
    p.add_argument("--cost-exponent", type=float, default=0.5, help="W(N) = N^e * log2(N+1)^p")
    p.add_argument("--polylog-power", type=int, default=0)


def _add_output_flags(p, formats=("json", "csv", "text")):
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=formats, default="json")


def _add_tree_flags(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--shape", default="balanced:2:3", help="balanced:<arity>:<depth> or random:<N>[:<max_arity>]")
    src.add_argument("--tree", default=None, help="JSON tree document written by `gen`")
    p.add_argument("--values", default="permutation", choices=("permutation", "uniform", "duplicates"))
    p.add_argument("--value-range", type=int, default=None)
    p.add_argument("--root-gate", default="max", choices=("min", "max"))


def build_parser():
    parser = _Parser(prog="qminmax", description="Random-pivot MIN-MAX tree evaluation simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate one tree")
    _add_tree_flags(p)
    p.add_argument("--model", choices=(COMPARISON, INPUT_VALUE), default=COMPARISON)
    _add_backend_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--early-stop", action="store_true")
    p.add_argument("--trace", action="store_true", help="include the annotated step trace")
    _add_output_flags(p)

    p = sub.add_parser("recurrence", help="tabulate the convergence recurrence")
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--c1", type=float, default=1.0, help="base case C(1)")
    _add_output_flags(p)

    p = sub.add_parser("convergence", help="iterations to convergence vs N (ideal backend)")
    p.add_argument("--n-list", type=_int_list, default=[16, 32, 64, 128, 256])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_output_flags(p)

    p = sub.add_parser("success", help="success rate over (epsilon, c-factor) grid")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--epsilons", type=_float_list, default=[0.0, 0.05, 0.1])
    p.add_argument("--c-factors", type=_float_list, default=None)
    p.add_argument("--amp-reps", type=int, default=1)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    _add_output_flags(p)

    p = sub.add_parser("scaling", help="query cost vs N")
    p.add_argument("--n-list", type=_int_list, default=[64, 128, 256, 512, 1024, 2048])
    _add_backend_flags(p)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--early-stop", action="store_true")
    _add_output_flags(p)

    p = sub.add_parser("gen", help="generate a tree document")
    _add_tree_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    return parser


def _validate(parser, args):
    if getattr(args, "epsilon", None) is not None and args.backend != "stochastic":
        parser.error("--epsilon requires --backend stochastic")
    if getattr(args, "c_factor", None) is not None and args.c_factor <= 0:
        parser.error("--c-factor must be positive")
    if getattr(args, "model", COMPARISON) == INPUT_VALUE and args.backend == "grover":
        parser.error("--model input-value is not available with --backend grover")
    reps = getattr(args, "amp_reps", 1)
    if reps < 1 or reps % 2 == 0:
        parser.error("--amp-reps must be an odd integer >= 1")
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be >= 1")
    for name in ("n_list",):
        if any(n < 1 for n in getattr(args, name, [])):
            parser.error("--n-list entries must be >= 1")
    if any(not 0 <= e < 0.5 for e in getattr(args, "epsilons", [])):
        parser.error("--epsilons entries must lie in [0, 0.5)")
    if getattr(args, "m_max", 1) < 1:
        parser.error("--m-max must be >= 1")


def _backend(args, seed):
    return BackendConfig(
        backend=args.backend,
        epsilon=args.epsilon or 0.0,
        andor_cost_exponent=args.cost_exponent,
        andor_polylog_power=args.polylog_power,
        amplification_reps=args.amp_reps,
        seed=seed,
    )


def _load_instance(args):
    if args.tree:
        return load_tree(Path(args.tree).read_text())
    shape = parse_shape(
        args.shape, value_dist=args.values, value_range=args.value_range, root_gate=args.root_gate, seed=args.seed
    )
    return gen_tree(shape)


def _resolve_out(path):
    base = os.environ.get(OUT_DIR_ENV)
    p = Path(path)
    return Path(base) / p if base and not p.is_absolute() else p


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        path = _resolve_out(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _render_record(rec, fmt):
    if fmt == "json":
        return json.dumps(rec, sort_keys=True, indent=2) + "\n"
    flat = harness._flatten({k: v for k, v in rec.items() if k != "trace"})
    if fmt == "text":
        width = max(len(k) for k in flat)
        return "".join(f"{k.ljust(width)}  {v}\n" for k, v in flat.items())
    keys = sorted(flat)
    return ",".join(keys) + "\n" + ",".join(str(flat[k]) for k in keys) + "\n"


def cmd_eval(args):
    tree, values = _load_instance(args)
    c = args.c_factor if args.c_factor is not None else EvaluatorConfig().c_factor
    cfg = EvaluatorConfig(
        c_factor=c, backend=_backend(args, args.seed), early_stop=args.early_stop, trace=args.trace, model=args.model
    )
    res = evaluate(tree, values, cfg)
    value, witness = eval_minmax(tree, values)
    rec = res.to_dict()
    rec.update(
        n=tree.n,
        model=args.model,
        tree_value=value,
        witness=witness,
        correct=bool(res.succeeded and values[res.answer - 1] == value),
        iteration_error_bound=cfg.backend.iteration_error_bound(),
        config={"c_factor": c, "early_stop": args.early_stop, "backend": cfg.backend.to_dict()},
    )
    if args.trace:
        annotate_trace(res.trace, tree, values)
        rec["trace"] = [r.to_dict() for r in res.trace]
        if args.out:
            _emit(trace_to_jsonl(res.trace), str(Path(args.out).with_suffix(".trace.jsonl")))
    _emit(_render_record(rec, args.format), args.out)
    return 0


def cmd_recurrence(args):
    table = harness.solve_recurrence(args.m_max, c1=args.c1)
    rows = [{"m": m, "C": float(table[m])} for m in range(1, args.m_max + 1)]
    if args.format == "json":
        text = json.dumps({"m_max": args.m_max, "c1": args.c1, "table": rows}, sort_keys=True, indent=2) + "\n"
    elif args.format == "csv":
        text = "m,C\n" + "".join(f"{r['m']},{r['C']!r}\n" for r in rows)
    else:
        width = len(str(args.m_max))
        text = f"{'m'.rjust(width)}  C(m)\n" + "".join(f"{str(r['m']).rjust(width)}  {r['C']:.6g}\n" for r in rows)
    _emit(text, args.out)
    return 0


def cmd_convergence(args):
    rep = harness.run_convergence_experiment(args.n_list, args.trials, args.seed)
    _emit(rep.render(args.format), args.out)
    return 0


def cmd_success(args):
    c_factors = args.c_factors or [EvaluatorConfig().c_factor]
    rep = harness.run_success_experiment(args.n, args.epsilons, c_factors, args.trials, args.seed, args.amp_reps)
    _emit(rep.render(args.format), args.out)
    return 0


def cmd_scaling(args):
    backend = _backend(args, args.seed)
    rep = harness.run_scaling_experiment(
        args.n_list, args.trials, args.seed, backend=backend, c_factor=args.c_factor, early_stop=args.early_stop
    )
    _emit(rep.render(args.format), args.out)
    return 0


def cmd_gen(args):
    tree, values = _load_instance(args)
    _emit(dump_tree(tree, values) + "\n", args.out)
    return 0


COMMANDS = {
    "eval": cmd_eval,
    "recurrence": cmd_recurrence,
    "convergence": cmd_convergence,
    "success": cmd_success,
    "scaling": cmd_scaling,
    "gen": cmd_gen,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ContractViolation) as exc:
        print(f"qminmax: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"qminmax: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
