"""Run the phased-path schedule for several (k, T) and show who decided what."""

import argparse

from partagree.harness import scenario_from_dict, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-k", type=int, default=4)
    ap.add_argument("--max-T", type=int, default=3)
    args = ap.parse_args()

    print("k\tT\tt\tn\tdecisions\tdistinct")
    for k in range(1, args.max_k + 1):
        for T in range(1, args.max_T + 1):
            t = k * T + 1
            top = {"p": 2, "protocol": "unknown_size", "quiet_period": T}
            trace = run(scenario_from_dict(top, {"name": "phased_path", "k": k, "t": t}))
            phased = trace.scenario.adversary_params["phased"]
            decided = [trace.final_states[phased.isolated(i)].decided for i in range(1, k + 2)]
            print(f"{k}\t{T}\t{t}\t{phased.n}\t{decided}\t{trace.verdict.agreement_k}")


if __name__ == "__main__":
    main()
