"""Command-line front end: instance generation, single runs, verification,
and parameter-sweep experiments."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .configuration import ConfigurationError, load_configuration, save_configuration
from .experiment import ExperimentSpec, run_experiment
from .simulator import (
    SCHEDULER_KINDS,
    default_step_limit,
    make_scheduler,
    random_configuration,
    randomize_states,
    run,
)
from .topology import (
    InstanceError,
    assign_roles,
    build_grid,
    build_random_connected,
    load_instance,
    save_instance,
)
from .verifier import full_verdict, reference_construct


def _subseed(seed: int, tag: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), tag])


def _parse_int_list(text: str) -> tuple[int, ...]:
    """Comma list ("5,10,15") or inclusive range ("6:26:2")."""
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) == 2:
            lo, hi, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            lo, hi, step = parts
        else:
            raise argparse.ArgumentTypeError(f"bad range {text!r}, use lo:hi[:step]")
        return tuple(range(lo, hi + 1, step))
    return tuple(int(x) for x in text.split(",") if x)


def cmd_gen(args) -> int:
    if args.grid_d is not None:
        topo = build_grid(args.grid_d)
    elif args.random_n is not None:
        topo = build_random_connected(args.random_n, args.density, _subseed(args.seed, 0))
    else:
        print("gen: need --grid-d or --random-n", file=sys.stderr)
        return 2
    roles = assign_roles(topo, args.senders, args.targets, _subseed(args.seed, 1))
    save_instance(args.out, topo, roles)
    print(f"wrote {args.out}: n={topo.n} m={topo.m} "
          f"|S|={args.senders} |T|={args.targets}")
    return 0


def cmd_run(args) -> int:
    topo, roles = load_instance(args.instance)
    if args.from_legitimate:
        cfg = reference_construct(topo, roles)
    else:
        cfg = random_configuration(topo, _subseed(args.seed, 1))
    if args.perturb > 0:
        k = max(1, round(args.perturb * topo.n))
        rng = np.random.default_rng(_subseed(args.seed, 2))
        nodes = rng.choice(topo.n, size=k, replace=False)
        cfg = randomize_states(cfg, nodes, _subseed(args.seed, 3))
    scheduler = make_scheduler(args.scheduler, _subseed(args.seed, 4))
    diameter = topo.diameter()
    limit = args.step_limit or default_step_limit(diameter, topo.n, args.scheduler)
    trace = run(topo, roles, cfg, scheduler, limit, record_steps=args.trace == "full")
    verdict = full_verdict(topo, roles, trace.final_config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "instance": str(args.instance),
        "scheduler": args.scheduler,
        "seed": args.seed,
        "converged": trace.converged,
        "steps": trace.total_steps,
        "rounds": trace.total_rounds,
        "layer_running_time": list(trace.layer_running_time),
        "layer_termination_round": list(trace.layer_termination_round),
        "layer_legitimacy_round": list(trace.layer_legitimacy_round),
        "rounds_detail": [asdict(r) for r in trace.rounds],
    }
    if trace.steps_log is not None:
        doc["steps_log"] = [asdict(s) for s in trace.steps_log]
    (out / "trace.json").write_text(json.dumps(doc, indent=1) + "\n")
    (out / "verdict.json").write_text(json.dumps(verdict.to_dict(), indent=1) + "\n")
    save_configuration(out / "final_config.json", trace.final_config)

    ok = trace.converged and verdict.all_pass
    print(f"converged={trace.converged} rounds={trace.total_rounds} "
          f"steps={trace.total_steps} verdict={'pass' if verdict.all_pass else 'FAIL'}")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    topo, roles = load_instance(args.instance)
    cfg = load_configuration(args.config, topo)
    rep = full_verdict(topo, roles, cfg)
    print(json.dumps(rep.to_dict(), indent=1))
    return 0 if rep.all_pass else 1


def cmd_experiment(args) -> int:
    spec = ExperimentSpec(
        grid_ds=tuple(args.grid_d or ()),
        instance_files=tuple(args.instance or ()),
        s_counts=tuple(args.senders),
        t_counts=tuple(args.targets),
        scheduler=args.scheduler,
        iterations=args.iterations,
        master_seed=args.seed,
        record_series=args.series,
        workers=args.workers,
    )
    result = run_experiment(spec, out_dir=args.out)
    bad = 0
    for c in result.cells:
        agg = result.aggregates[c.index]
        bad += int(agg["non_converged"])
        print(f"cell {c.index}: {c.topology} d={c.d} |S|={c.s_count} |T|={c.t_count} "
              f"rounds={agg['rounds_mean']:.2f}±{agg['rounds_std']:.2f} "
              f"non_converged={int(agg['non_converged'])}")
    if bad and args.scheduler != "adv":
        print(f"{bad} iterations did not converge", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stdag",
        description="Self-stabilizing minimal weakly ST-reachable DAG construction: "
                    "simulate, verify, experiment.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--grid-d", type=int, default=None, help="grid side length")
    g.add_argument("--random-n", type=int, default=None, help="random graph node count")
    g.add_argument("--density", type=float, default=0.2)
    g.add_argument("--senders", type=int, required=True)
    g.add_argument("--targets", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one simulation and verify the result")
    r.add_argument("--instance", required=True)
    r.add_argument("--scheduler", choices=SCHEDULER_KINDS, default="sync")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="stdag-out")
    r.add_argument("--from-legitimate", action="store_true",
                   help="start from the reference fixpoint instead of random states")
    r.add_argument("--perturb", type=float, default=0.0,
                   help="fraction of nodes whose state is redrawn before the run")
    r.add_argument("--trace", choices=("summary", "full"), default="summary")
    r.add_argument("--step-limit", type=int, default=None)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="verify a serialized configuration")
    v.add_argument("--instance", required=True)
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="parameter-sweep experiments")
    e.add_argument("--grid-d", type=_parse_int_list, default=None,
                   help="grid sizes: '6,8,10' or '6:26:2'")
    e.add_argument("--instance", action="append", default=None,
                   help="instance file (repeatable); roles are redrawn per iteration")
    e.add_argument("--senders", type=_parse_int_list, default=(1,))
    e.add_argument("--targets", type=_parse_int_list, default=(1,))
    e.add_argument("--scheduler", choices=SCHEDULER_KINDS, default="sync")
    e.add_argument("--iterations", type=int, default=500)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.add_argument("--series", action=argparse.BooleanOptionalAction, default=True)
    e.add_argument("--workers", type=int, default=None)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ConfigurationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
