"""
Routing as many distinct descriptions as possible
=================================================

The 0-1 program picks, per link and description, whether the description
crosses the link. Branch and bound with LP bounds solves it. We check the
answer against exhaustive search on a small graph, then try a random
growth network of 50 nodes.
"""

import time

from jnsc import DescriptionSet, GrowthParams, brute_force, build_crnf_ilp, extract_flow, grow_dag, solve
from jnsc.rainbow import rainbow_flow_vector

net = grow_dag(GrowthParams(n_nodes=6, in_degree_draws=2, c_max=2, seed=3))
desc = DescriptionSet(3)
print(net.edges)
sol = solve(build_crnf_ilp(net, desc))
print("branch and bound:", sol.objective_value, "exhaustive:", brute_force(net, desc))

net = grow_dag(GrowthParams(n_nodes=50, in_degree_draws=3, c_max=3, seed=1))
for K in (2, 4, 6, 8):
    desc = DescriptionSet(K)
    model = build_crnf_ilp(net, desc)
    t0 = time.perf_counter()
    sol = solve(model, time_limit=5.0)
    flow = extract_flow(sol, net, desc)
    q = rainbow_flow_vector(flow, net, K)
    print(f"K={K}: {sol.objective_value:g} of {K * len(net.sinks)} possible "
          f"(bound {sol.bound:g}, {sol.status.value}, {time.perf_counter() - t0:.2f} s), "
          f"{len(flow)} paths, histogram {q.histogram().tolist()}")
