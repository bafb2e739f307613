"""Dev probe: 2-AP/1-UE cooperative optimum and small brute-force check."""
import warnings

import numpy as np

warnings.filterwarnings("ignore")

from comppursuit.network import ChannelParams, ExtendedApSet, Topology, build_extended_model, enumerate_extended
from comppursuit.rates import pattern_rates
from comppursuit import fp

# --- hand-built 2 AP / 1 UE equal-gain instance -------------------------
params = ChannelParams()
g = 50.0 * params.n0 / params.pmax  # full-power SNR of 50 per link
gains = np.array([[g], [g]])
hoods = [np.array([0, 1])]

for mode, factor in [("coherent", 4.0), ("noncoherent", 2.0)]:
    exts = enumerate_extended(hoods, gains, params, mode=mode)
    res = fp.solve_affine(np.array([1.0]), exts, params)
    r = pattern_rates(res.pattern, exts, params.n0)[0]
    expect = np.log2(1.0 + factor * g * params.pmax / params.n0)
    print(mode, "start:", res.start, "active:", np.flatnonzero(res.pattern.active),
          "p/pmax:", res.pattern.power[res.pattern.active] / params.pmax,
          "rate:", r, "expected:", expect, "rel err:", abs(r - expect) / expect)

# --- brute force for a few n=4/k=4 instances -----------------------------
from itertools import combinations, product


def brute_force_best(exts, params, c):
    """Exhaustive max of sum_j c_j r_j over p in {0, pmax} and feasible (d, u)."""
    m, k = exts.m, exts.n_ues
    n = exts.n_physical
    members = [np.flatnonzero(exts.member[i]) for i in range(m)]
    ext_sets = [set(exts.ext_label(i)) for i in range(m)]
    best = 0.0
    usable = [i for i in range(m) if members[i].size]
    for size in range(1, n + 1):
        for combo in combinations(usable, size):
            used = set()
            ok = True
            for i in combo:
                if used & ext_sets[i]:
                    ok = False
                    break
                used |= ext_sets[i]
            if not ok:
                continue
            for assign in product(*[members[i] for i in combo]):
                p = np.zeros(m)
                act = np.zeros(m, dtype=bool)
                srv = np.full(m, -1)
                for i, j in zip(combo, assign):
                    p[i] = params.pmax
                    act[i] = True
                    srv[i] = j
                pat = fp.Pattern(p, act, srv)
                val = float(np.sum(c * pattern_rates(pat, exts, params.n0)))
                if val > best:
                    best = val
    return best


from comppursuit.network import generate_topology

ratios = []
for seed in range(10):
    topo = generate_topology(4, 4, area=(700.0, 700.0), seed=100 + seed)
    exts = build_extended_model(topo, params, mode="coherent")
    c = np.ones(4)
    res = fp.solve_affine(c, exts, params)
    got = float(np.sum(c * pattern_rates(res.pattern, exts, params.n0)))
    ref = brute_force_best(exts, params, c)
    ratios.append(got / ref if ref > 0 else 1.0)
    print(f"seed {100+seed}: solver {got:.6f}  brute {ref:.6f}  ratio {ratios[-1]:.4f}  start {res.start}")
print("min ratio:", min(ratios))
