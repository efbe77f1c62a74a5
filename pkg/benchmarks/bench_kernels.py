"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --rows 2000 8000 --trees 50

Each case is run on both backends. The resulting models are compared
byte-for-byte, so a speedup never hides a behavioural difference.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from shortspam import synth
from shortspam.features import Mode, extract
from shortspam.learn import TrainParams, available_backends, predict_scores, train


def timed(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, nargs="+", default=[2000, 8000])
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    args = ap.parse_args(argv)

    backends = available_backends()
    if "native" not in backends:
        print("compiled kernels are not built; only the python backend can be timed", file=sys.stderr)

    results = []
    for n in args.rows:
        out = synth.generate(synth.SynthParams(n_links=n, separation="hard", seed=1))
        m = extract(out.labeled(), out.whois_store(), Mode.FULL)
        X = m.to_numpy()
        cases = {
            "decision_tree": TrainParams(),
            "random_forest": TrainParams(tree_count=args.trees),
        }
        for kind, params in cases.items():
            row = {"rows": n, "case": f"train {kind}"}
            dumps = {}
            models = {}
            for b in backends:
                t, model = timed(lambda: train(kind, m, params, backend=b), args.repeat)
                row[b] = t
                dumps[b] = model.dumps()
                models[b] = model
            row["identical"] = len(set(dumps.values())) == 1
            results.append(row)

            row = {"rows": n, "case": f"predict {kind}"}
            scores = {}
            for b in backends:
                t, s = timed(lambda: predict_scores(models[b], X, backend=b), args.repeat)
                row[b] = t
                scores[b] = s
            row["identical"] = all(np.array_equal(scores[backends[0]], s) for s in scores.values())
            results.append(row)

    if args.json:
        print(json.dumps(results, indent=2))
        return 0
    head = f"{'rows':>6}  {'case':<24}" + "".join(f"{b + ' (s)':>14}" for b in backends)
    if len(backends) == 2:
        head += f"{'speedup':>10}"
    print(head + f"{'identical':>11}")
    for r in results:
        line = f"{r['rows']:>6}  {r['case']:<24}" + "".join(f"{r[b]:>14.4f}" for b in backends)
        if len(backends) == 2:
            line += f"{r['python'] / r['native']:>9.1f}x"
        print(line + f"{str(r['identical']):>11}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
