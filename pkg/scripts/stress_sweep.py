"""Synthesize, verify and audit a stratified random corpus; print a per-class table.

Example: python3 scripts/stress_sweep.py --per-class 40 --seed 1
"""

import argparse
import time
from collections import Counter

from wshsa.analysis import ConditionClass
from wshsa.corpus import stratified_corpus
from wshsa.scheme import synthesize_instance
from wshsa.security import audit_lemmas


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    quota = {c: args.per_class for c in ConditionClass if c is not ConditionClass.INFEASIBLE}
    t0 = time.perf_counter()
    corpus = stratified_corpus(args.seed, quota)
    stats: dict[str, Counter] = {}
    for inst in corpus:
        out = synthesize_instance(inst, seed=args.seed)
        row = stats.setdefault(out.rate.condition.value, Counter())
        row["instances"] += 1
        if out.result is None:
            row["failed"] += 1
            continue
        row["verified"] += 1
        row["consistent"] += out.consistent
        if out.rate.upper != out.rate.lower:
            row["below_upper"] += out.achieved < out.rate.upper
        row["lemma_violations"] += len(audit_lemmas(inst, out.result.scheme, out.report).violations)

    cols = ["instances", "verified", "consistent", "failed", "below_upper", "lemma_violations"]
    print(f"{'class':10}" + "".join(f"{c:>18}" for c in cols))
    for cls in sorted(stats):
        print(f"{cls:10}" + "".join(f"{stats[cls][c]:>18}" for c in cols))
    print(f"{len(corpus)} instances in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
