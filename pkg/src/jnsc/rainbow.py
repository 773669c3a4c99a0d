"""Rainbow network flows: colored flow paths, spectra, admissibility and
the distortion they induce at the sinks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .netgen import Network


@dataclass(frozen=True)
class DescriptionSet:
    count: int
    rate: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("need at least one description")
        if not self.rate > 0:
            raise ValueError("description rate must be positive")

    @property
    def ids(self) -> range:
        return range(1, self.count + 1)


@dataclass(frozen=True)
class FlowPath:
    """Sequence of edges ``[(v0, v1), (v1, v2), ...]``."""

    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))

    @classmethod
    def from_nodes(cls, nodes: Sequence[int]) -> "FlowPath":
        return cls(tuple(zip(nodes[:-1], nodes[1:])))

    @property
    def nodes(self) -> list[int]:
        if not self.edges:
            return []
        return [self.edges[0][0]] + [v for _, v in self.edges]

    @property
    def origin(self) -> int | None:
        return self.edges[0][0] if self.edges else None


class RainbowFlow:
    """A set of flow paths together with a coloring ``path -> description id``.

    Stored as a tuple of ``(path, color)`` pairs; an identical path may appear
    once per color.
    """

    def __init__(self, colored_paths: Iterable[tuple[FlowPath, int]] = ()):
        items = []
        seen = set()
        for path, color in colored_paths:
            if not isinstance(path, FlowPath):
                path = FlowPath(tuple(path))
            key = (path, int(color))
            if key not in seen:
                seen.add(key)
                items.append(key)
        self.paths: tuple[tuple[FlowPath, int], ...] = tuple(items)

    def __iter__(self):
        return iter(self.paths)

    def __len__(self):
        return len(self.paths)

    def __eq__(self, other):
        if not isinstance(other, RainbowFlow):
            return NotImplemented
        return set(self.paths) == set(other.paths)

    def __repr__(self):
        return f"RainbowFlow({len(self.paths)} paths)"

    def with_path(self, path: FlowPath, color: int) -> "RainbowFlow":
        return RainbowFlow(list(self.paths) + [(path, color)])

    def colors(self) -> set[int]:
        return {c for _, c in self.paths}

    def edge_spectra(self) -> dict[tuple[int, int], set[int]]:
        out: dict[tuple[int, int], set[int]] = {}
        for path, color in self.paths:
            for e in path.edges:
                out.setdefault(e, set()).add(color)
        return out

    def node_spectra(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {}
        for path, color in self.paths:
            for v in path.nodes:
                out.setdefault(v, set()).add(color)
        return out


@dataclass(frozen=True)
class DistortionModel:
    """Level distortion ``delta(k)`` for ``k = 0..K`` plus the distortion-rate curve.

    ``levels[k]`` is the distortion with ``k`` distinct descriptions.
    """

    levels: tuple[float, ...]
    drf: Callable[[float], float] | None = None

    def __post_init__(self):
        lv = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "levels", lv)
        if len(lv) < 1:
            raise ValueError("need delta(0)")
        if min(lv) < 0:
            raise ValueError("distortions must be non-negative")
        if any(b > a + 1e-12 for a, b in zip(lv, lv[1:])):
            raise ValueError("level distortion must be non-increasing")
        if self.drf is not None:
            if abs(self.drf(0.0) - lv[0]) > 1e-9:
                raise ValueError("delta(0) must equal D(0)")
            grid = np.linspace(0.0, 8.0, 161)
            vals = np.array([self.drf(R) for R in grid])
            if np.any(np.diff(vals) > 1e-12):
                raise ValueError("distortion-rate function is not non-increasing")
            if np.any(vals[:-2] - 2 * vals[1:-1] + vals[2:] < -1e-12):
                raise ValueError("distortion-rate function is not convex")

    @property
    def K(self) -> int:
        return len(self.levels) - 1

    def delta(self, k: int) -> float:
        return self.levels[min(k, self.K)]

    @classmethod
    def cardinality(cls, K: int) -> "DistortionModel":
        """delta(k) = 1 - k/K, the CRNF model."""
        return cls(tuple(1.0 - k / K for k in range(K + 1)))

    @classmethod
    def constant(cls, K: int, value: float = 1.0) -> "DistortionModel":
        return cls((value,) * (K + 1))


@dataclass(frozen=True)
class RainbowFlowVector:
    q: dict[int, int]
    K: int

    def __post_init__(self):
        for t, v in self.q.items():
            if not 0 <= v <= self.K:
                raise ValueError(f"q[{t}]={v} outside 0..{self.K}")

    def as_array(self, order: Sequence[int] | None = None) -> np.ndarray:
        keys = sorted(self.q) if order is None else order
        return np.array([self.q[t] for t in keys], dtype=int)

    def histogram(self) -> np.ndarray:
        return np.bincount(self.as_array(), minlength=self.K + 1)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: object
    detail: str


def _check_edge(net: Network, e):
    if not net.has_edge(*e):
        raise KeyError(f"{e} is not an edge of the network")


def _check_node(net: Network | None, v):
    if net is not None and v not in net.node_ids:
        raise KeyError(f"{v} is not a node of the network")


def edge_spectrum(flow: RainbowFlow, e, net: Network | None = None) -> set[int]:
    e = (int(e[0]), int(e[1]))
    if net is not None:
        _check_edge(net, e)
    return {c for path, c in flow if e in path.edges}


def node_spectrum(flow: RainbowFlow, v: int, net: Network | None = None,
                  desc: DescriptionSet | None = None) -> set[int]:
    """Colors on paths through ``v``; a source with ``desc`` given also holds all of them."""
    _check_node(net, v)
    out = {c for path, c in flow if v in path.nodes}
    if net is not None and desc is not None and v in net.sources:
        out |= set(desc.ids)
    return out


@dataclass
class AdmissibilityReport:
    admissible: bool
    violations: list[tuple[tuple[int, int], int, float]]

    def __bool__(self):
        return self.admissible


def is_admissible(flow: RainbowFlow, net: Network, desc: DescriptionSet,
                  tol: float = 1e-9) -> AdmissibilityReport:
    """Check ``rate * |edge spectrum| <= capacity`` on every edge.

    Violations are ``(edge, spectrum size, capacity)`` triples.
    """
    bad = []
    spectra = flow.edge_spectra()
    for u, v, cap in net.edges:
        n = len(spectra.get((u, v), ()))
        if desc.rate * n > cap + tol:
            bad.append(((u, v), n, cap))
    return AdmissibilityReport(not bad, bad)


def rainbow_flow_vector(flow: RainbowFlow, net: Network, K: int | None = None) -> RainbowFlowVector:
    spectra = flow.node_spectra()
    q = {t: len(spectra.get(t, ())) for t in sorted(net.sinks)}
    if K is None:
        K = max(flow.colors(), default=0)
    return RainbowFlowVector(q, K)


def sink_distortion(flow: RainbowFlow, t: int, model: DistortionModel,
                    net: Network | None = None) -> float:
    if net is not None and t not in net.sinks:
        raise KeyError(f"{t} is not a sink")
    return model.delta(len(node_spectrum(flow, t)))


def average_distortion(flow: RainbowFlow, net: Network, model: DistortionModel) -> float:
    """``|T|^-1 * sum_t p_t * delta(q_t)``; zero for an empty sink set."""
    if not net.sinks:
        return 0.0
    spectra = flow.node_spectra()
    total = sum(net.sink_weights[t] * model.delta(len(spectra.get(t, ())))
                for t in net.sinks)
    return total / len(net.sinks)


def validate_flow(flow: RainbowFlow, net: Network, desc: DescriptionSet | None = None) -> list[Violation]:
    out = []
    for i, (path, color) in enumerate(flow):
        if not path.edges:
            out.append(Violation("empty", i, "path has no edges"))
            continue
        for (a, b), (c, d) in zip(path.edges, path.edges[1:]):
            if b != c:
                out.append(Violation("connectivity", i, f"gap between ({a},{b}) and ({c},{d})"))
        for e in path.edges:
            if not net.has_edge(*e):
                out.append(Violation("edge", i, f"{e} is not an edge"))
        if path.origin not in net.sources:
            out.append(Violation("origin", i, f"path starts at non-source {path.origin}"))
        if desc is not None:
            ok = 1 <= color <= desc.count
        else:
            ok = color >= 1
        if not ok:
            out.append(Violation("color", i, f"color {color} out of range"))
    return out


# -- flow document ------------------------------------------------------------

def flow_to_list(flow: RainbowFlow) -> list[dict]:
    return [{"color": c, "path": p.nodes} for p, c in flow]


def flow_from_list(doc) -> RainbowFlow:
    if not isinstance(doc, list):
        raise ValueError("flow document must be an array")
    items = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or set(entry) != {"color", "path"}:
            raise ValueError(f"flow entry {i} must have exactly 'color' and 'path'")
        nodes = entry["path"]
        if not isinstance(nodes, list) or len(nodes) < 2:
            raise ValueError(f"flow entry {i}: path needs at least two nodes")
        items.append((FlowPath.from_nodes([int(v) for v in nodes]), int(entry["color"])))
    return RainbowFlow(items)


def save_flow(flow: RainbowFlow, destination) -> None:
    Path(destination).write_text(json.dumps(flow_to_list(flow), indent=1))


def load_flow(source) -> RainbowFlow:
    return flow_from_list(json.loads(Path(source).read_text()))


def fig1_flow() -> RainbowFlow:
    """The worked two-description flow on :func:`jnsc.netgen.fig1_network`."""
    return RainbowFlow([
        (FlowPath.from_nodes([1, 2, 4]), 1),
        (FlowPath.from_nodes([1, 2, 5]), 1),
        (FlowPath.from_nodes([1, 3, 4]), 2),
        (FlowPath.from_nodes([1, 3, 5]), 2),
    ])
