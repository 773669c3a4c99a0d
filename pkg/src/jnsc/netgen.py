"""Network instances: the data model, the random-growth DAG family, the
two-description fixture and a JSON document format.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class NetworkError(ValueError):
    """Raised for structurally invalid networks or malformed documents."""


class CycleError(NetworkError):
    pass


Edge = tuple[int, int]


@dataclass(frozen=True)
class Network:
    """Directed acyclic graph with edge capacities, sources, sinks and sink weights.

    Capacities are in bits per source symbol. Instances are validated on
    construction and never mutated afterwards.
    """

    node_ids: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]
    sources: frozenset[int]
    sinks: frozenset[int]
    sink_weights: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(int(v) for v in self.node_ids))
        object.__setattr__(
            self, "edges", tuple((int(u), int(v), float(c)) for u, v, c in self.edges)
        )
        object.__setattr__(self, "sources", frozenset(int(s) for s in self.sources))
        object.__setattr__(self, "sinks", frozenset(int(t) for t in self.sinks))
        weights = {t: 1.0 for t in self.sinks}
        for t, w in self.sink_weights.items():
            weights[int(t)] = float(w)
        object.__setattr__(self, "sink_weights", weights)
        self._validate()

    def _validate(self):
        nodes = set(self.node_ids)
        if len(nodes) != len(self.node_ids):
            raise NetworkError("duplicate node ids")
        seen = set()
        for u, v, c in self.edges:
            if u not in nodes or v not in nodes:
                raise NetworkError(f"edge ({u},{v}) references an unknown node")
            if u == v:
                raise NetworkError(f"self-loop at node {u}")
            if (u, v) in seen:
                raise NetworkError(f"parallel edge ({u},{v})")
            if not c >= 0 or not np.isfinite(c):
                raise NetworkError(f"edge ({u},{v}) has invalid capacity {c}")
            seen.add((u, v))
        for name, group in (("sources", self.sources), ("sinks", self.sinks)):
            unknown = group - nodes
            if unknown:
                raise NetworkError(f"{name} reference unknown nodes {sorted(unknown)}")
        for t, w in self.sink_weights.items():
            if t not in self.sinks:
                raise NetworkError(f"sink_weights names non-sink {t}")
            if not w > 0:
                raise NetworkError(f"sink weight of {t} must be positive, got {w}")
        order = self.topological_order()
        reach = set(self.sources)
        for v in order:
            if v in reach:
                reach.update(self.successors(v))
        stranded = self.sinks - reach
        if stranded:
            raise NetworkError(f"sinks {sorted(stranded)} are unreachable from every source")

    # adjacency and topological order are cached on first use
    def _adjacency(self):
        cache = self.__dict__.get("_adj")
        if cache is None:
            succ = {v: [] for v in self.node_ids}
            pred = {v: [] for v in self.node_ids}
            cap = {}
            for u, v, c in self.edges:
                succ[u].append(v)
                pred[v].append(u)
                cap[(u, v)] = c
            cache = (succ, pred, cap)
            object.__setattr__(self, "_adj", cache)
        return cache

    def successors(self, v: int) -> list[int]:
        return self._adjacency()[0][v]

    def predecessors(self, v: int) -> list[int]:
        return self._adjacency()[1][v]

    def capacity(self, u: int, v: int) -> float:
        try:
            return self._adjacency()[2][(u, v)]
        except KeyError:
            raise KeyError(f"({u},{v}) is not an edge") from None

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._adjacency()[2]

    @property
    def edge_list(self) -> list[Edge]:
        return [(u, v) for u, v, _ in self.edges]

    def topological_order(self) -> list[int]:
        """Kahn's algorithm; ties resolved by position in ``node_ids``."""
        cache = self.__dict__.get("_topo")
        if cache is not None:
            return list(cache)
        succ, pred, _ = self._adjacency()
        indeg = {v: len(pred[v]) for v in self.node_ids}
        position = {v: i for i, v in enumerate(self.node_ids)}
        ready = [(position[v], v) for v in self.node_ids if indeg[v] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            _, v = heapq.heappop(ready)
            order.append(v)
            for w in succ[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(ready, (position[w], w))
        if len(order) != len(self.node_ids):
            stuck = sorted(v for v in self.node_ids if indeg[v] > 0)
            raise CycleError(f"graph has a cycle through nodes {stuck}")
        object.__setattr__(self, "_topo", tuple(order))
        return order

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.node_ids == other.node_ids
            and self.edges == other.edges
            and self.sources == other.sources
            and self.sinks == other.sinks
            and self.sink_weights == other.sink_weights
        )

    def __hash__(self):
        return hash((self.node_ids, self.edges, self.sources, self.sinks))


@dataclass(frozen=True)
class GrowthParams:
    n_nodes: int
    in_degree_draws: int = 3
    c_max: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.in_degree_draws < 1:
            raise ValueError("in_degree_draws must be >= 1")
        if self.c_max < 1:
            raise ValueError("c_max must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def grow_dag(params: GrowthParams) -> Network:
    """Random peer-to-peer style growth.

    Node ``i`` draws ``m`` parents uniformly with replacement among nodes
    ``0..i-1``; repeated draws collapse to a single edge. Capacities are
    uniform on ``{1..c_max}``. Both draws use ``raw % n`` on PCG64 output.
    """
    bitgen = np.random.PCG64(params.seed)
    m = params.in_degree_draws
    edges = []
    for i in range(1, params.n_nodes):
        raw = bitgen.random_raw(m)
        parents = sorted({int(x % i) for x in raw})
        caps = bitgen.random_raw(len(parents))
        for u, c in zip(parents, caps):
            edges.append((u, i, float(1 + int(c % params.c_max))))
    nodes = tuple(range(params.n_nodes))
    return Network(nodes, tuple(edges), frozenset({0}), frozenset(nodes[1:]))


def fig1_network(capacity: float = 1.0) -> Network:
    """Five-node diamond: source 1 feeds relays 2, 3, which both feed 4 and 5."""
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    pairs = [(1, 2), (1, 3), (2, 4), (2, 5), (3, 4), (3, 5)]
    return Network(
        (1, 2, 3, 4, 5),
        tuple((u, v, capacity) for u, v in pairs),
        frozenset({1}),
        frozenset({2, 3, 4, 5}),
    )


# -- document format --------------------------------------------------------

_TOP_FIELDS = {"nodes", "edges", "sources", "sinks", "sink_weights"}
_EDGE_FIELDS = {"from", "to", "capacity"}


def network_to_dict(net: Network) -> dict:
    doc = {
        "nodes": list(net.node_ids),
        "edges": [{"from": u, "to": v, "capacity": c} for u, v, c in net.edges],
        "sources": sorted(net.sources),
        "sinks": sorted(net.sinks),
    }
    weights = {str(t): w for t, w in sorted(net.sink_weights.items()) if w != 1.0}
    if weights:
        doc["sink_weights"] = weights
    return doc


def _int_field(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetworkError(f"{where} must be an integer, got {value!r}")
    return value


def network_from_dict(doc) -> Network:
    if not isinstance(doc, dict):
        raise NetworkError("network document must be an object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise NetworkError(f"unknown field(s) {sorted(unknown)}")
    for key in ("nodes", "edges", "sources", "sinks"):
        if key not in doc:
            raise NetworkError(f"missing field '{key}'")
        if not isinstance(doc[key], list):
            raise NetworkError(f"field '{key}' must be an array")
    nodes = [_int_field(v, "nodes[]") for v in doc["nodes"]]
    edges = []
    for i, e in enumerate(doc["edges"]):
        if not isinstance(e, dict):
            raise NetworkError(f"edges[{i}] must be an object")
        extra = set(e) - _EDGE_FIELDS
        if extra:
            raise NetworkError(f"edges[{i}] has unknown field(s) {sorted(extra)}")
        missing = _EDGE_FIELDS - set(e)
        if missing:
            raise NetworkError(f"edges[{i}] missing field(s) {sorted(missing)}")
        cap = e["capacity"]
        if isinstance(cap, bool) or not isinstance(cap, (int, float)):
            raise NetworkError(f"edges[{i}].capacity must be a number")
        edges.append((_int_field(e["from"], f"edges[{i}].from"),
                      _int_field(e["to"], f"edges[{i}].to"), float(cap)))
    sources = [_int_field(v, "sources[]") for v in doc["sources"]]
    sinks = [_int_field(v, "sinks[]") for v in doc["sinks"]]
    raw_weights = doc.get("sink_weights", {})
    if not isinstance(raw_weights, dict):
        raise NetworkError("field 'sink_weights' must be an object")
    weights = {}
    for k, w in raw_weights.items():
        try:
            t = int(k)
        except ValueError:
            raise NetworkError(f"sink_weights key {k!r} is not a node id") from None
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise NetworkError(f"sink_weights[{k}] must be a number")
        weights[t] = float(w)
    return Network(tuple(nodes), tuple(edges), frozenset(sources), frozenset(sinks), weights)


def save_network(net: Network, destination) -> None:
    Path(destination).write_text(json.dumps(network_to_dict(net), indent=1))


def load_network(source) -> Network:
    try:
        doc = json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise NetworkError(f"not a JSON document: {exc}") from exc
    return network_from_dict(doc)
