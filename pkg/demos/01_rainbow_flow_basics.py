"""
Rainbow flows on the five-node diamond
======================================

A source holds two descriptions. Each link fits exactly one of them, but a
relay may copy what it receives onto several outgoing links for free. The
two relays forward different descriptions, so both bottom nodes get both.
"""

from jnsc import (DescriptionSet, DistortionModel, FlowPath, average_distortion, edge_spectrum, fig1_flow,
                  fig1_network, is_admissible, node_spectrum, rainbow_flow_vector)

net = fig1_network(1.0)
flow = fig1_flow()
desc = DescriptionSet(2, rate=1.0)

for path, color in flow:
    print("color", color, "along", path.nodes)

# what crosses each link, and what each node ends up holding
for u, v, cap in net.edges:
    print(f"edge {u}->{v} (cap {cap}): {sorted(edge_spectrum(flow, (u, v)))}")
for v in net.node_ids:
    print(f"node {v}: {sorted(node_spectrum(flow, v, net, desc))}")

print("admissible:", bool(is_admissible(flow, net, desc)))
print("descriptions per sink:", rainbow_flow_vector(flow, net, 2).q)

# with delta(k) = 1 - k/K the average distortion is one minus the delivered fraction
print("cardinality distortion:", average_distortion(flow, net, DistortionModel.cardinality(2)))

# send a second color down the left relay and the first link overflows
greedy = flow.with_path(FlowPath.from_nodes([1, 2]), 2)
print(is_admissible(greedy, net, desc).violations)
