"""Exact adversarial worst case (n <= 4) against the p-agreement budget."""

from partagree.analysis import brute_force_worst_rounds
from partagree.protocol import budget_p_agreement

print("n\tp\tworst\tbudget")
for n in range(1, 5):
    for p in range(1, n + 1):
        print(f"{n}\t{p}\t{brute_force_worst_rounds(n, p)}\t{budget_p_agreement(n, p)}")
