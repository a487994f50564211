"""Command-line front end.

Subcommands: diagnose (leading diagnoses of a DPI file), query (one query
through the full pipeline), simulate (seeded closed-loop sessions against a
simulated oracle, optionally comparing the legacy generate-and-test method),
generate (benchmark DPIs), serve (the HTTP session service).

Output policy: stdout is byte-identical across runs for fixed inputs and
seeds, so wall-clock timings never go there.  Text mode prints timings to
stderr; --json mode emits the session transcript schema as JSON lines with
the timings field nulled, and the measured values again land on stderr.

Exit codes: 0 success, 1 unreadable/invalid DPI, 2 usage, 3 too few
diagnoses to build a query.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import NoReturn

from .baseline import std_method_query
from .diag import leading_diagnoses
from .dpi import AdmissibilityError, DPI, DpiFormatError, dump_dpi, load_dpi
from .generate import pair_chain_dpi, random_dpi
from .logic import ParseError
from .qpsearch import Measure
from .session import (QueryPlan, Session, SessionConfig, diagnosis_priors,
                      run_simulation)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_TOO_FEW = 3


def _fail(msg: str) -> NoReturn:
    print(f"sd: error: {msg}", file=sys.stderr)
    raise SystemExit(EXIT_ERROR)


def _load(path: str) -> DPI:
    try:
        return load_dpi(path)
    except OSError as e:
        _fail(f"cannot read {path}: {e.strerror or e}")
    except (ParseError, DpiFormatError, AdmissibilityError) as e:
        _fail(str(e))


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _diagnosis_json(dpi: DPI, ids, prob: float) -> dict:
    return {
        "diagnosis": sorted(ids),
        "formulas": [str(f) for f in dpi.formulas_of(ids)],
        "prob": prob,
    }


# ---------------------------------------------------------------------------
# diagnose


def cmd_diagnose(args) -> int:
    dpi = _load(args.dpi)
    t0 = time.perf_counter()
    diags = leading_diagnoses(dpi, args.n, args.rank)
    elapsed = (time.perf_counter() - t0) * 1000.0
    priors = diagnosis_priors(diags, dpi)
    if args.json:
        for i, d in enumerate(diags):
            print(json.dumps(_diagnosis_json(dpi, d.ids, priors[i])))
    else:
        for i, d in enumerate(diags):
            print(f"D{i + 1}: {sorted(d.ids)}  p={priors[i]:.4f}")
            for fid in sorted(d.ids):
                print(f"    {fid}: {dpi.kb[fid - 1]}")
    print(f"diagnosis took {elapsed:.1f} ms", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# query


def _phases(enrich: bool) -> tuple[str, ...]:
    return ("p1", "p2", "p3", "p4") if enrich else ("p1", "p2")


def _print_timings(plan: QueryPlan, enrich: bool) -> None:
    parts = " ".join(f"{ph}={plan.timings_ms[ph]:.2f}" for ph in _phases(enrich))
    print(f"timings (ms): {parts}", file=sys.stderr)


def cmd_query(args) -> int:
    dpi = _load(args.dpi)
    cfg = SessionConfig(n=args.n, measure=args.measure, threshold=args.threshold,
                        criterion=args.criterion, enrich=args.enrich, sigma=1.0)
    session = Session(dpi, cfg)
    if len(session.diagnoses) < 2:
        print("sd: error: needs at least two leading diagnoses to build a query",
              file=sys.stderr)
        return EXIT_TOO_FEW
    plan = session.next_query()
    qp = {
        "dplus": [sorted(session.diagnoses[i].ids) for i in sorted(plan.node.dplus)],
        "dminus": [sorted(session.diagnoses[i].ids) for i in sorted(plan.node.dminus)],
        "dzero": [],
    }
    calls = {ph: plan.reasoner_calls[ph] for ph in _phases(args.enrich)}
    if args.json:
        print(json.dumps({
            "query": plan.texts(),
            "explicit": sorted(plan.explicit_ids),
            "implicit": [str(f) for f in plan.implicit],
            "qpartition": qp,
            "measure": args.measure,
            "measure_value": plan.measure_value,
            "goal_met": plan.goal_met,
            "reasoner_calls": calls,
            "timings_ms": None,
        }))
    else:
        print("query:")
        for fid in sorted(plan.explicit_ids):
            print(f"  {fid}: {dpi.kb[fid - 1]}")
        for f in plan.implicit:
            print(f"  *: {f}")
        print("q-partition:")
        print("  D+: " + ", ".join(str(d) for d in qp["dplus"]))
        print("  D-: " + ", ".join(str(d) for d in qp["dminus"]))
        print("  D0: -")
        print(f"measure value ({args.measure}): {plan.measure_value:.6f}")
        if not plan.goal_met:
            print("note: threshold not met; reporting the best q-partition found")
        print("reasoner calls: " + " ".join(f"{k}={v}" for k, v in calls.items()))
    _print_timings(plan, args.enrich)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _trial_seed(seed: int, trial: int) -> int:
    return seed * 1_000_003 + trial


def cmd_simulate(args) -> int:
    dpi = _load(args.dpi)
    if args.compare_std and args.measure == "random":
        print("sd: error: --compare-std needs --measure ent or spl", file=sys.stderr)
        return EXIT_USAGE
    candidates = leading_diagnoses(dpi, args.n, warn=False)
    if len(candidates) < 2:
        print("sd: error: needs at least two leading diagnoses to simulate",
              file=sys.stderr)
        return EXIT_TOO_FEW

    import random as _random

    for trial in range(args.trials):
        tseed = _trial_seed(args.seed, trial)
        rng = _random.Random(tseed)
        target = rng.choice(candidates)
        cfg = SessionConfig(n=args.n, measure=args.measure, sigma=1.0,
                            enrich=args.enrich, seed=tseed)
        res = run_simulation(dpi, target.ids, cfg)

        compare = None
        if args.compare_std:
            first = res.transcript[0]
            priors = diagnosis_priors(candidates, dpi)
            m = Measure(args.measure, priors if args.measure == "ent" else None)
            std = std_method_query(candidates, dpi, m, fraction=1.0, seed=tseed)
            compare = {
                "hquo_calls": sum(first["reasoner_calls"].values()),
                "std_calls": std.sat_probes,
                "hquo_value": first["measure_value"],
                "std_value": std.value,
            }
            hquo_ms = sum(first["timings_ms"].values())
            ratio = std.elapsed_ms / hquo_ms if hquo_ms > 0 else float("inf")
            print(f"trial {trial}: hquo {hquo_ms:.2f} ms, std {std.elapsed_ms:.2f} ms, "
                  f"time ratio {ratio:.1f}x", file=sys.stderr)

        if args.json:
            for row in res.transcript:
                out = dict(row)
                out["trial"] = trial
                out["timings_ms"] = None
                print(json.dumps(out))
            summary = {
                "trial": trial,
                "target": sorted(res.target),
                "final": sorted(res.final.ids),
                "hit": res.hit,
                "rounds": res.rounds,
                "answers": list(res.answers),
            }
            if compare is not None:
                summary["compare_std"] = compare
            print(json.dumps(summary))
        else:
            marks = ", ".join("yes" if a else "no" for a in res.answers)
            print(f"trial {trial}: target {sorted(res.target)} -> "
                  f"final {sorted(res.final.ids)} in {res.rounds} rounds "
                  f"({'hit' if res.hit else 'MISS'}; answers: {marks})")
            for row in res.transcript:
                print(f"  round {row['round']}: ask {row['query']} "
                      f"answer {'yes' if row['answer'] else 'no'} "
                      f"eliminated {row['eliminated']}")
            if compare is not None:
                print(f"  compare-std: hquo_calls={compare['hquo_calls']} "
                      f"std_calls={compare['std_calls']} "
                      f"hquo_value={compare['hquo_value']:.6f} "
                      f"std_value={compare['std_value']:.6f}")
        print(f"trial {trial} took {res.total_ms:.1f} ms", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    if args.kind == "random":
        dpi = random_dpi(args.seed, n_atoms=args.atoms, kb_size=args.kb,
                         with_probs=args.probs, depth=args.depth)
    else:
        dpi = pair_chain_dpi(args.pairs)
    text = dump_dpi(dpi)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.bind, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sd", description="Sequential diagnosis for propositional KBs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dpi=True):
        if dpi:
            p.add_argument("--dpi", required=True, help="DPI file")
        p.add_argument("--json", action="store_true",
                       help="JSON-lines output instead of text")

    p = sub.add_parser("diagnose", help="compute the leading diagnoses")
    common(p)
    p.add_argument("-n", type=_positive_int, required=True,
                   help="number of leading diagnoses")
    p.add_argument("--rank", choices=("card", "prob"), default="card")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("query", help="compute one query for the leading diagnoses")
    common(p)
    p.add_argument("-n", type=_positive_int, required=True)
    p.add_argument("--measure", choices=("ent", "spl"), required=True)
    p.add_argument("--criterion", choices=("card", "minsum", "maxprob"),
                   default="card")
    p.add_argument("--enrich", action="store_true",
                   help="run the enrich and optimize phases")
    p.add_argument("--threshold", type=float, default=None,
                   help="override the measure's goal tolerance")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("simulate", help="closed-loop sessions with a simulated oracle")
    common(p)
    p.add_argument("-n", type=_positive_int, required=True)
    p.add_argument("--measure", choices=("ent", "spl", "random"), required=True)
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--enrich", action="store_true")
    p.add_argument("--compare-std", action="store_true",
                   help="also run the generate-and-test method per trial")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="write a benchmark DPI")
    p.add_argument("kind", choices=("random", "pairs"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--atoms", type=_positive_int, default=5)
    p.add_argument("--kb", type=_positive_int, default=8)
    p.add_argument("--depth", type=_positive_int, default=2)
    p.add_argument("--pairs", "-k", type=_positive_int, default=4,
                   help="pair count for the pairs family")
    p.add_argument("--probs", action="store_true",
                   help="attach random fault probabilities")
    p.add_argument("-o", "--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--bind", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
