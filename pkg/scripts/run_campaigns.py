"""Run the differential campaigns and print aggregate counts.

    python3 scripts/run_campaigns.py --solver 2000 --wp 1000 --pipeline 500
    python3 scripts/run_campaigns.py --pipeline 200 --start 10000 --json out.json

Each campaign loops over consecutive seeds; any failing seed is listed so it
can be replayed with the matching ``*_case`` function.
"""

import argparse
import collections
import json
import sys
import time

from microdeduct.differential import pipeline_case, solver_case, wp_case


def solver_campaign(seeds):
    verdicts = collections.Counter()
    bad = []
    for s in seeds:
        o = solver_case(s)
        verdicts[o.verdict] += 1
        if not (o.agrees and o.model_ok):
            bad.append(s)
    n = max(1, sum(verdicts.values()))
    return {"cases": n, "verdicts": dict(verdicts), "unknown_rate": verdicts["UNKNOWN"] / n, "failing_seeds": bad}


def wp_campaign(seeds):
    states, unsound, not_weakest = 0, [], []
    for s in seeds:
        o = wp_case(s)
        states += o.checked
        if o.unsound is not None:
            unsound.append(s)
        if o.not_weakest is not None:
            not_weakest.append(s)
    return {"cases": len(seeds), "states": states, "unsound_seeds": unsound, "not_weakest_seeds": not_weakest}


def pipeline_campaign(seeds):
    status = collections.Counter()
    verdicts = collections.Counter()
    violations, unproved, escapes = [], [], []
    dropped = true_contracts = 0
    for s in seeds:
        o = pipeline_case(s)
        status[o.status] += 1
        if o.status != "ok":
            continue
        verdicts[o.verdict] += 1
        dropped += o.dropped
        true_contracts += bool(o.contract_true)
        if o.helper_violations:
            violations.append(s)
        if o.contract_true and o.verdict != "verified":
            unproved.append(s)
        if o.interval_escapes:
            escapes.append(s)
    return {
        "cases": len(seeds),
        "status": dict(status),
        "verdicts": dict(verdicts),
        "true_contracts": true_contracts,
        "with_dropped_constraints": dropped,
        "helper_violation_seeds": violations,
        "unverified_true_seeds": unproved,
        "interval_escape_seeds": escapes,
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--solver", type=int, default=2000, help="solver cases (0 to skip)")
    p.add_argument("--wp", type=int, default=1000, help="wp cases (0 to skip)")
    p.add_argument("--pipeline", type=int, default=500, help="pipeline cases (0 to skip)")
    p.add_argument("--start", type=int, default=0, help="first seed")
    p.add_argument("--json", help="also write the results here")
    args = p.parse_args(argv)

    results = {}
    for name, count, fn in (
        ("solver", args.solver, solver_campaign),
        ("wp", args.wp, wp_campaign),
        ("pipeline", args.pipeline, pipeline_campaign),
    ):
        if count <= 0:
            continue
        t0 = time.perf_counter()
        res = fn(range(args.start, args.start + count))
        res["seconds"] = round(time.perf_counter() - t0, 2)
        results[name] = res
        print(f"{name}: {json.dumps(res, sort_keys=True)}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
    failed = any(v for r in results.values() for k, v in r.items() if k.endswith("_seeds"))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
