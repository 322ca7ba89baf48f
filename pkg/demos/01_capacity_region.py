"""Where secure broadcast aggregation is possible, and at what key cost.

For K users tolerating T colluders with group size G, the problem is solvable
exactly when 2 <= G <= K - T - 1. On the feasible range, each user must send
one symbol per input symbol, and each group key needs
(K - T - 2) / C(K - T - 1, G) symbols per input symbol.
"""

from dsagg import capacity, optimal_group_size_report

K = 8
print(f"per-group key rate R_S* for K = {K} (rows: T, columns: G; '-' = infeasible)")
header = "T\\G " + " ".join(f"{g:>7}" for g in range(1, K + 1))
print(header)
for T in range(0, K - 2):
    cells = []
    for G in range(1, K + 1):
        region = capacity(K, T, G)
        cells.append(f"{str(region.r_s_star):>7}" if region.feasible else "      -")
    print(f"{T:>3} " + " ".join(cells))

print()
print("best group size (smallest per-group key rate) for a few settings:")
for K, T in [(8, 0), (8, 2), (20, 0), (20, 5)]:
    rep = optimal_group_size_report(K, T)
    ties = "" if len(rep.minimizers) == 1 else f" (tied with G={rep.minimizers[1:]})"
    print(f"  K={K:>2} T={T}: G*={rep.best}{ties}, "
          f"closed form floor((K-T-1)/2) = {rep.formula}")
