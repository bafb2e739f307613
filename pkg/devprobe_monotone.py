"""Dev probe: per-update objective monotonicity across random instances."""
import numpy as np

from comppursuit.network import ChannelParams, build_extended_model, generate_topology
from comppursuit import fp

worst = 0.0
worst_info = None
for seed in range(60):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 17))
    k = int(rng.integers(2, 49))
    topo = generate_topology(n, k, area=(1200.0, 1200.0), seed=seed)
    params = ChannelParams()
    mode = ["noncoherent", "coherent"][seed % 2]
    exts = build_extended_model(topo, params, mode=mode)
    c = rng.uniform(0.0, 2.0, size=k)
    for init_name, make in [
        ("selfish", lambda: fp.init_state(exts, params, c)),
        ("coop", lambda: fp.init_cooperative(exts, params, c)),
        ("coop-opt", lambda: fp.init_cooperative(exts, params, c, optimistic=True)),
    ]:
        state = make()
        prev = fp.objective(state)
        for it in range(60):
            for step_name, step in [
                ("gamma", fp.update_gamma),
                ("y", fp.update_y),
                ("p", fp.update_p),
                ("u", fp.update_u),
                ("d", fp.update_d),
            ]:
                step(state)
                obj = fp.objective(state)
                dip = prev - obj
                rel = dip / max(abs(prev), 1e-30)
                if rel > worst:
                    worst = rel
                    worst_info = (seed, n, k, mode, init_name, it, step_name, prev, obj)
                prev = obj

print("worst relative dip:", worst)
print("info:", worst_info)
