"""Worst merge round the greedy adversary forces, next to the round budgets.

    python scripts/greedy_vs_budget.py --max-n 14 --max-p 4
"""

import argparse

from partagree.harness import scenario_from_dict, run
from partagree.protocol import budget_p_agreement


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-n", type=int, default=12)
    ap.add_argument("--max-p", type=int, default=3)
    ap.add_argument("--candidates", type=int, default=200)
    args = ap.parse_args()

    print("n\tp\tbudget\tgreedy_merge\tstatic_merge")
    for n in range(2, args.max_n + 1):
        for p in range(1, min(args.max_p, n) + 1):
            merges = []
            for adversary in ({"name": "greedy_min_phi", "candidate_budget": args.candidates}, {"name": "static_path"}):
                trace = run(scenario_from_dict({"n": n, "p": p}, adversary))
                merges.append(trace.merge_round)
            print(f"{n}\t{p}\t{budget_p_agreement(n, p)}\t{merges[0]}\t{merges[1]}")


if __name__ == "__main__":
    main()
