"""Command-line entry point ``reachmax``.

Exit codes: 0 success, 1 invalid input (parse or validation failure),
2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines
from .chain import ChainSpec, validate_chain
from .errors import CombinatorialLimit, NonConvergence, ReachmaxError, SingularMatrix
from .greedy import lazy_greedy, simple_greedy
from .io import (CHAIN_MAGIC, atomic_write, format_bipartite, format_chain, parse_bipartite_file,
                 parse_chain_file, parse_edge_list_file)
from .objective import eval_reach
from .oracle import dense_solve_f, exhaustive_opt, gen_vertex_cover_instance, monte_carlo_f
from .sweep import ALL_METHODS, ExperimentConfig, run_sweep
from .synth import gen_synthetic
from .tags import TagGraph, build_bipartite, fold, fold_equivalence_check

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
FOLD_TOL = 1e-9


class UsageError(ValueError):
    pass


def _is_chain_file(path) -> bool:
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                return line == CHAIN_MAGIC
    return False


def _load(path, validate=True) -> tuple[ChainSpec, TagGraph | None]:
    """A chain file as is, or a bipartite dataset folded to its tags."""
    if _is_chain_file(path):
        return parse_chain_file(path, validate=validate), None
    g = parse_bipartite_file(path)
    return fold(g).spec, g


def _parse_set(text: str, g: TagGraph | None) -> tuple[int, ...]:
    out = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        if g is not None and tok in g.tags:
            out.append(g.tag_state(tok))
        elif tok.lstrip("+-").isdigit():
            out.append(int(tok))
        else:
            raise UsageError(f"unknown state {tok!r}")
    return tuple(out)


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write(args.out, text)
    sys.stdout.write(text)


def cmd_validate(args) -> int:
    if _is_chain_file(args.path):
        spec = parse_chain_file(args.path, validate=False)
        report = validate_chain(spec)
    else:
        g = parse_bipartite_file(args.path)
        report = validate_chain(fold(g).spec)
        if report.ok:
            report = validate_chain(build_bipartite(g))
    text = str(report) + "\n"
    if args.out:
        atomic_write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_evaluate(args) -> int:
    spec, g = _load(args.path)
    s = _parse_set(args.set, g)
    payload = {"set": list(s)}
    if args.oracle == "lup":
        res = eval_reach(spec, s)
        payload.update(f=res.f, residual=res.residual)
    elif args.oracle == "dense":
        payload["f"] = dense_solve_f(spec, s)
    else:
        est = monte_carlo_f(spec, s, n_walks=args.walks, seed=args.seed)
        payload.update(f=est.estimate, stderr=est.stderr, n_walks=est.n_walks, horizon=est.horizon,
                       seed=est.seed)
    _emit(args, payload)
    return EXIT_OK


def cmd_optimize(args) -> int:
    spec, g = _load(args.path)
    cands = g.candidate_states if g is not None else None
    payload = {"method": args.method, "k": args.k}
    if args.method == "greedy":
        s, trace = simple_greedy(spec, args.k, candidates=cands)
        payload.update(f_trace=trace.f_values, n_evals=trace.n_evals, order=trace.chosen)
    elif args.method == "lazy-greedy":
        s, trace = lazy_greedy(spec, args.k, candidates=cands)
        payload.update(f_trace=trace.f_values, n_evals=trace.n_evals, order=trace.chosen)
    elif args.method == "exhaustive":
        s, _ = exhaustive_opt(spec, args.k, candidates=cands)
    else:
        if g is None:
            raise UsageError(f"method {args.method!r} needs a bipartite dataset")
        s = baselines.select(args.method, g, args.k, baselines.BaselineConfig(args.method, seed=args.seed))
    payload["set"] = list(s)
    if g is not None:
        payload["tags"] = g.labels_of(s)
    payload["f"] = eval_reach(spec, s).f
    _emit(args, payload)
    return EXIT_OK


def cmd_fold_check(args) -> int:
    g = parse_bipartite_file(args.path)
    s = _parse_set(args.set, g)
    f_folded, f_full, diff = fold_equivalence_check(g, s)
    _emit(args, {"set": list(s), "f_folded": f_folded, "f_full": f_full, "diff": diff})
    return EXIT_OK if diff <= FOLD_TOL else EXIT_RUNTIME


def cmd_gen_vc(args) -> int:
    inst = gen_vertex_cover_instance(parse_edge_list_file(args.path), args.epsilon)
    text = format_chain(inst.bipartite if args.bipartite else inst.chain)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gen_synth(args) -> int:
    g = gen_synthetic(args.n_items, args.n_tags, args.edges_per_item, args.weight_exponent, args.seed,
                      epsilon=args.epsilon)
    text = format_bipartite(g)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig(
        k_max=args.k_max, methods=tuple(args.methods.split(",")), seed=args.seed,
        n_instances=args.n_instances, dataset=args.dataset, n_items=args.n_items, n_tags=args.n_tags,
        edges_per_item=args.edges_per_item, weight_exponent=args.weight_exponent, epsilon=args.epsilon,
        workers=args.workers, timing=args.timing, out=args.out)
    result = run_sweep(cfg)
    if not args.out:
        sys.stdout.write(result.to_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--out", help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="reachmax", description="Tag selection by absorption probability.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("validate", parents=[common], help="check a chain or bipartite file")
    c.add_argument("path")
    c.set_defaults(func=cmd_validate)

    c = sub.add_parser("evaluate", parents=[common], help="reach probability of one selection")
    c.add_argument("path")
    c.add_argument("--set", required=True, help="comma-separated states or tag labels")
    c.add_argument("--oracle", choices=("lup", "dense", "mc"), default="lup")
    c.add_argument("--walks", type=int, default=100_000)
    c.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("optimize", parents=[common], help="choose k states")
    c.add_argument("path")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--method", choices=ALL_METHODS + ("exhaustive",), default="lazy-greedy")
    c.set_defaults(func=cmd_optimize)

    c = sub.add_parser("fold-check", parents=[common], help="compare folded and full chains")
    c.add_argument("path")
    c.add_argument("--set", default="")
    c.set_defaults(func=cmd_fold_check)

    c = sub.add_parser("gen-vc", parents=[common], help="vertex-cover gadget chain from an edge list")
    c.add_argument("path")
    c.add_argument("--epsilon", type=float, default=0.1)
    c.add_argument("--bipartite", action="store_true", help="emit the tag/item variant")
    c.set_defaults(func=cmd_gen_vc)

    defaults = ExperimentConfig()
    for name, fn in (("gen-synth", cmd_gen_synth), ("sweep", cmd_sweep)):
        c = sub.add_parser(name, parents=[common])
        c.add_argument("--n-items", type=int, default=defaults.n_items)
        c.add_argument("--n-tags", type=int, default=defaults.n_tags)
        c.add_argument("--edges-per-item", type=int, default=defaults.edges_per_item)
        c.add_argument("--weight-exponent", type=float, default=defaults.weight_exponent)
        c.add_argument("--epsilon", type=float, default=defaults.epsilon)
        c.set_defaults(func=fn)
        if name == "sweep":
            c.add_argument("--dataset", help="bipartite file; synthetic instances otherwise")
            c.add_argument("--k-max", type=int, default=defaults.k_max)
            c.add_argument("--methods", default=",".join(ALL_METHODS))
            c.add_argument("--n-instances", type=int, default=defaults.n_instances)
            c.add_argument("--workers", type=int, default=None)
            c.add_argument("--timing", action="store_true", help="record wall times (output no longer reproducible)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None):
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    try:
        return args.func(args)
    except (SingularMatrix, NonConvergence, CombinatorialLimit, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:   # parse, validation and argument errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ReachmaxError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

if __name__ == "__main__":
    sys.exit(main())
