"""0-1 integer programs for rainbow network flow on DAGs.

Variables are ``x[e, k]`` (edge ``e`` carries description ``k``) and
``y[v, k]`` (node ``v`` holds description ``k``). Constraints:

* in-flow:      y[v, k] <= sum over in-edges (u, v) of x[(u, v), k]   (v not a source)
* duplication:  x[(i, j), k] <= y[i, k]
* capacity:     r * sum_k x[e, k] <= R(e)
* sources:      y[s, k] = 1

The cardinality objective maximizes the number of distinct descriptions over
all sinks. The weighted variant adds prefix indicators ``z[t, j]`` so that an
arbitrary non-increasing level distortion is minimized exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .netgen import Network
from .rainbow import DescriptionSet, DistortionModel, FlowPath, RainbowFlow


class ExtractionError(RuntimeError):
    pass


@dataclass
class IlpModel:
    """Linear 0-1 program ``max c.x`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``lb <= x <= ub``."""

    net: Network
    desc: DescriptionSet
    names: list
    edge_vars: dict
    node_vars: dict
    level_vars: dict
    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    families: dict = field(default_factory=dict)
    integral_objective: bool = True
    objective_offset: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def evaluate(self, x) -> float:
        return float(np.dot(self.c, x))

    def violations(self, x, tol: float = 1e-7) -> list[str]:
        x = np.asarray(x, dtype=float)
        out = []
        if np.any(x < self.lb - tol) or np.any(x > self.ub + tol):
            out.append("bounds")
        if self.A_ub.shape[0]:
            slack = self.A_ub @ x - self.b_ub
            for fam, (lo, hi) in self.families.items():
                if hi > lo and np.any(slack[lo:hi] > tol):
                    out.append(fam)
        if self.A_eq.shape[0] and np.any(np.abs(self.A_eq @ x - self.b_eq) > tol):
            out.append("equality")
        return out

    def is_feasible(self, x, tol: float = 1e-7) -> bool:
        return not self.violations(x, tol)


class _Builder:
    def __init__(self):
        self.names = []
        self.rows, self.cols, self.vals, self.rhs = [], [], [], []
        self.eq_rows, self.eq_cols, self.eq_vals, self.eq_rhs = [], [], [], []

    def var(self, name) -> int:
        self.names.append(name)
        return len(self.names) - 1

    def le(self, coeffs, rhs):
        r = len(self.rhs)
        for j, a in coeffs:
            self.rows.append(r)
            self.cols.append(j)
            self.vals.append(a)
        self.rhs.append(rhs)

    def eq(self, coeffs, rhs):
        r = len(self.eq_rhs)
        for j, a in coeffs:
            self.eq_rows.append(r)
            self.eq_cols.append(j)
            self.eq_vals.append(a)
        self.eq_rhs.append(rhs)

    def matrices(self):
        n = len(self.names)
        A_ub = sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.rhs), n))
        A_eq = sp.csr_matrix((self.eq_vals, (self.eq_rows, self.eq_cols)), shape=(len(self.eq_rhs), n))
        return A_ub, np.array(self.rhs, float), A_eq, np.array(self.eq_rhs, float)


def _build(net: Network, desc: DescriptionSet, symmetry_breaking: bool):
    K = desc.count
    b = _Builder()
    edge_vars = {}
    node_vars = {}
    for v in net.node_ids:
        for k in desc.ids:
            node_vars[(v, k)] = b.var(("y", v, k))
    for u, v, _ in net.edges:
        for k in desc.ids:
            edge_vars[((u, v), k)] = b.var(("x", (u, v), k))
    families = {}

    start = len(b.rhs)
    for v in net.node_ids:
        if v in net.sources:
            continue
        preds = net.predecessors(v)
        for k in desc.ids:
            b.le([(node_vars[(v, k)], 1.0)] + [(edge_vars[((u, v), k)], -1.0) for u in preds], 0.0)
    families["in-flow"] = (start, len(b.rhs))

    start = len(b.rhs)
    for u, v, _ in net.edges:
        for k in desc.ids:
            b.le([(edge_vars[((u, v), k)], 1.0), (node_vars[(u, k)], -1.0)], 0.0)
    families["duplication"] = (start, len(b.rhs))

    start = len(b.rhs)
    for u, v, cap in net.edges:
        b.le([(edge_vars[((u, v), k)], desc.rate) for k in desc.ids], cap)
    families["capacity"] = (start, len(b.rhs))

    start = len(b.rhs)
    if symmetry_breaking and K > 1:
        for (u, v), cls in _source_edge_classes(net, desc):
            # within a class of still-interchangeable colors, use a prefix
            for k1, k2 in zip(cls, cls[1:]):
                b.le([(edge_vars[((u, v), k2)], 1.0), (edge_vars[((u, v), k1)], -1.0)], 0.0)
    families["symmetry"] = (start, len(b.rhs))
    return b, edge_vars, node_vars, families


def _source_edge_classes(net: Network, desc: DescriptionSet):
    """Color classes that stay interchangeable along the first two source edges.

    Every optimum can be relabelled so that the widest out-edge of the first
    source carries a prefix of the colors and the next one carries a prefix of
    each class the first edge leaves behind.
    """
    if len(net.sources) != 1:
        return []
    s = next(iter(net.sources))
    outs = sorted(net.successors(s), key=lambda v: (-net.capacity(s, v), v))[:2]
    ids = list(desc.ids)
    out = [((s, outs[0]), ids)] if outs else []
    if len(outs) == 2:
        c1 = min(desc.count, int(net.capacity(s, outs[0]) / desc.rate + 1e-9))
        out += [((s, outs[1]), ids[:c1]), ((s, outs[1]), ids[c1:])]
    return out


def _bounds(b: _Builder, net: Network, desc: DescriptionSet, node_vars, edge_vars):
    n = len(b.names)
    lb = np.zeros(n)
    ub = np.ones(n)
    for s in net.sources:
        for k in desc.ids:
            lb[node_vars[(s, k)]] = 1.0
    # an edge too thin for a single description can never carry one
    for u, v, cap in net.edges:
        if desc.rate > cap + 1e-12:
            for k in desc.ids:
                ub[edge_vars[((u, v), k)]] = 0.0
    return lb, ub


def build_crnf_ilp(net: Network, desc: DescriptionSet, symmetry_breaking: bool = False) -> IlpModel:
    """Cardinality objective: maximize ``sum_t sum_k y[t, k]``."""
    b, edge_vars, node_vars, families = _build(net, desc, symmetry_breaking)
    c = np.zeros(len(b.names))
    for t in net.sinks:
        for k in desc.ids:
            c[node_vars[(t, k)]] = 1.0
    A_ub, b_ub, A_eq, b_eq = b.matrices()
    lb, ub = _bounds(b, net, desc, node_vars, edge_vars)
    return IlpModel(net, desc, b.names, edge_vars, node_vars, {}, c, A_ub, b_ub, A_eq, b_eq,
                    lb, ub, families, integral_objective=True)


def build_weighted_rnf_ilp(net: Network, desc: DescriptionSet, model: DistortionModel,
                           weights: dict | None = None, symmetry_breaking: bool = False) -> IlpModel:
    """Minimize ``sum_t p_t delta(q_t)`` through level indicators ``z[t, j]``.

    The objective maximized is ``sum_t p_t sum_j (delta(j-1) - delta(j)) z[t, j]``,
    which equals ``sum_t p_t (delta(0) - delta(q_t))``.
    """
    K = desc.count
    if model.K < K:
        raise ValueError(f"distortion model defines {model.K} levels, need {K}")
    gains = [model.delta(j - 1) - model.delta(j) for j in range(1, K + 1)]
    if min(gains) < -1e-12:
        raise ValueError("level distortion must be non-increasing")
    p = dict(net.sink_weights)
    if weights is not None:
        p.update({int(t): float(w) for t, w in weights.items()})
    b, edge_vars, node_vars, families = _build(net, desc, symmetry_breaking)
    level_vars = {}
    for t in sorted(net.sinks):
        for j in range(1, K + 1):
            level_vars[(t, j)] = b.var(("z", t, j))
    start = len(b.rhs)
    for t in sorted(net.sinks):
        for j in range(1, K):
            b.le([(level_vars[(t, j + 1)], 1.0), (level_vars[(t, j)], -1.0)], 0.0)
        b.eq([(level_vars[(t, j)], 1.0) for j in range(1, K + 1)]
             + [(node_vars[(t, k)], -1.0) for k in desc.ids], 0.0)
    families["levels"] = (start, len(b.rhs))
    c = np.zeros(len(b.names))
    for (t, j), idx in level_vars.items():
        c[idx] = p[t] * gains[j - 1]
    A_ub, b_ub, A_eq, b_eq = b.matrices()
    lb, ub = _bounds(b, net, desc, node_vars, edge_vars)
    integral = all(abs(v - round(v)) < 1e-12 for v in c)
    offset = sum(p[t] * model.delta(0) for t in net.sinks)
    return IlpModel(net, desc, b.names, edge_vars, node_vars, level_vars, c, A_ub, b_ub, A_eq,
                    b_eq, lb, ub, families, integral_objective=integral, objective_offset=offset)


# -- assignments ----------------------------------------------------------------

def spectra_to_assignment(model: IlpModel, edge_masks: dict, node_masks: dict | None = None) -> np.ndarray:
    """Assignment from per-edge color sets; node sets default to what arrives."""
    net, desc = model.net, model.desc
    if node_masks is None:
        node_masks = {}
        for v in net.topological_order():
            if v in net.sources:
                node_masks[v] = set(desc.ids)
            else:
                node_masks[v] = set().union(*(edge_masks.get((u, v), set()) for u in net.predecessors(v)))
    x = np.zeros(model.n_vars)
    for (e, k), idx in model.edge_vars.items():
        x[idx] = float(k in edge_masks.get(e, ()))
    for (v, k), idx in model.node_vars.items():
        x[idx] = float(k in node_masks.get(v, ()))
    if model.level_vars:
        for (t, j), idx in model.level_vars.items():
            x[idx] = float(j <= len(node_masks.get(t, ())))
    return x


def close_assignment(model: IlpModel, x) -> np.ndarray:
    """Raise every ``y[v, k]`` that an incoming edge supports; recompute level indicators.

    Feasibility is preserved and the objective never decreases.
    """
    x = np.round(np.asarray(x, dtype=float))
    edge_masks = {}
    for (e, k), idx in model.edge_vars.items():
        if x[idx] > 0.5:
            edge_masks.setdefault(e, set()).add(k)
    out = spectra_to_assignment(model, edge_masks)
    return out


def greedy_assignment(model: IlpModel, scores: np.ndarray | None = None) -> np.ndarray:
    """Feasible assignment built in topological order.

    Each node collects as many distinct colors as its in-edges allow (a small
    bipartite matching per node); ``scores`` (e.g. an LP solution) steer which
    colors each edge prefers.
    """
    net, desc = model.net, model.desc
    slots = {(u, v): int(np.floor(cap / desc.rate + 1e-9)) for u, v, cap in net.edges}
    held: dict[int, set] = {}
    edge_masks: dict = {}
    for v in net.topological_order():
        if v in net.sources:
            held[v] = set(desc.ids)
            continue
        preds = net.predecessors(v)
        pref = {}
        for u in preds:
            for k in held[u]:
                s = 0.0 if scores is None else scores[model.edge_vars[((u, v), k)]]
                pref[(u, k)] = s
        got = _max_coverage(preds, held, slots, v, pref)
        edge_masks.update(got)
        held[v] = set().union(*got.values()) if got else set()
    return spectra_to_assignment(model, edge_masks)


def _max_coverage(preds, held, slots, v, pref):
    """Assign colors to in-edges of ``v``: max distinct colors, each edge within its slots.

    Augmenting-path bipartite b-matching between colors and in-edges.
    """
    colors = sorted(set().union(*(held[u] for u in preds)) if preds else set(),
                    key=lambda k: (-max((pref.get((u, k), 0.0) for u in preds), default=0.0), k))
    assigned = {u: [] for u in preds}

    def augment(k, seen):
        options = sorted((u for u in preds if k in held[u] and slots[(u, v)] > 0),
                         key=lambda u: (-pref.get((u, k), 0.0), u))
        for u in options:
            if u in seen:
                continue
            seen.add(u)
            if len(assigned[u]) < slots[(u, v)]:
                assigned[u].append(k)
                return True
            for other in list(assigned[u]):
                if augment(other, seen):
                    assigned[u].remove(other)
                    assigned[u].append(k)
                    return True
        return False

    for k in colors:
        augment(k, set())
    return {(u, v): set(ks) for u, ks in assigned.items() if ks}


# -- exhaustive oracle ------------------------------------------------------------

MAX_ENUMERATION_BITS = 24


def brute_force(net: Network, desc: DescriptionSet, model: DistortionModel | None = None,
                weights: dict | None = None, chunk: int = 1 << 16, return_assignment: bool = False):
    """Exhaustive optimum over all edge-color assignments.

    Node sets follow by propagation in topological order (a node holds what
    any in-edge brings); assignments that forward a color the tail does not
    hold, or that overload an edge, are discarded. Returns the CRNF objective,
    or with ``model`` the weighted gain ``sum_t p_t (delta(0) - delta(q_t))``.
    """
    K = desc.count
    E = list(net.edge_list)
    if K * len(E) > MAX_ENUMERATION_BITS:
        raise ValueError(f"K*|E| = {K * len(E)} exceeds the enumeration bound {MAX_ENUMERATION_BITS}")
    full = (1 << K) - 1
    popcount = np.array([bin(m).count("1") for m in range(1 << K)])
    # capacity filter applied up front: per-edge admissible color masks
    options = [np.array([m for m in range(1 << K) if desc.rate * popcount[m] <= cap + 1e-9], dtype=np.int64)
               for _, _, cap in net.edges]
    radix = [len(o) for o in options]
    total = int(np.prod(radix, dtype=object)) if radix else 1
    pos = {v: i for i, v in enumerate(net.node_ids)}
    eidx = {e: i for i, e in enumerate(E)}
    order = net.topological_order()
    sinks = sorted(net.sinks)
    p = dict(net.sink_weights)
    if weights is not None:
        p.update(weights)
    if model is None:
        score = popcount.astype(float)
        sink_w = np.ones(len(sinks))
    else:
        score = np.array([model.delta(0) - model.delta(popcount[m]) for m in range(1 << K)])
        sink_w = np.array([p[t] for t in sinks])

    best, best_idx = -np.inf, None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        rem = idx.copy()
        emask = np.empty((len(E), len(idx)), dtype=np.int64)
        for i, opts in enumerate(options):
            rem, digit = np.divmod(rem, radix[i])
            emask[i] = opts[digit]
        nmask = np.zeros((len(net.node_ids), len(idx)), dtype=np.int64)
        for v in order:
            if v in net.sources:
                nmask[pos[v]] = full
            else:
                acc = np.zeros(len(idx), dtype=np.int64)
                for u in net.predecessors(v):
                    acc |= emask[eidx[(u, v)]]
                nmask[pos[v]] = acc
        ok = np.ones(len(idx), dtype=bool)
        for i, (u, v) in enumerate(E):
            ok &= (emask[i] & ~nmask[pos[u]]) == 0
        if not ok.any():
            continue
        value = np.zeros(len(idx))
        for w, t in zip(sink_w, sinks):
            value += w * score[nmask[pos[t]]]
        value[~ok] = -np.inf
        j = int(np.argmax(value))
        if value[j] > best + 1e-12:
            best, best_idx = value[j], idx[j]
    if model is None:
        best = int(round(best))
    if not return_assignment:
        return best
    rem = best_idx
    masks = {}
    for i, opts in enumerate(options):
        rem, digit = divmod(int(rem), radix[i])
        m = int(opts[digit])
        masks[E[i]] = {k + 1 for k in range(K) if m >> k & 1}
    return best, masks


# -- flow extraction ----------------------------------------------------------------

def edge_masks_from_assignment(model: IlpModel, x) -> dict:
    out = {}
    for (e, k), idx in model.edge_vars.items():
        if x[idx] > 0.5:
            out.setdefault(e, set()).add(k)
    return out


def extract_flow(solution, net: Network, desc: DescriptionSet, model: IlpModel | None = None) -> RainbowFlow:
    """Turn an edge/node assignment into explicit colored paths.

    Per color, every node holding it gets a parent edge (the first in-edge
    carrying the color from a node already reached). One path is emitted per
    carrying edge, routed through the parents; paths that are prefixes of
    others are dropped.
    """
    x = solution.assignment if hasattr(solution, "assignment") else solution
    if model is None:
        model = getattr(solution, "model", None) or build_crnf_ilp(net, desc)
    if x is None:
        return RainbowFlow()
    x = np.asarray(x)
    items = []
    for k in desc.ids:
        carrying = [e for e in net.edge_list if x[model.edge_vars[(e, k)]] > 0.5]
        if not carrying:
            continue
        incoming = {}
        for u, v in carrying:
            incoming.setdefault(v, []).append(u)
        route: dict[int, list[int]] = {}
        for v in net.topological_order():
            if v in net.sources:
                route[v] = [v]
                continue
            parents = [u for u in incoming.get(v, []) if u in route]
            if parents:
                u = min(parents, key=lambda u: (len(route[u]), u))
                route[v] = route[u] + [v]
        paths = []
        for u, v in carrying:
            if u not in route:
                raise ExtractionError(f"description {k} leaves node {u} which never receives it")
            if x[model.node_vars[(u, k)]] < 0.5:
                raise ExtractionError(f"description {k} forwarded by {u} without holding it")
            via = route[v] if route.get(v, [None])[:-1] == route[u] else route[u] + [v]
            paths.append(tuple(via))
        unique = set(paths)
        prefixes = {p[:i] for p in unique for i in range(2, len(p))}
        for p in sorted(unique - prefixes):
            items.append((FlowPath.from_nodes(list(p)), k))
    return RainbowFlow(items)


def all_admissible_edge_masks(net: Network, desc: DescriptionSet):
    """Yield every feasible edge-color assignment (small instances only)."""
    K = desc.count
    if K * len(net.edges) > MAX_ENUMERATION_BITS:
        raise ValueError("instance too large to enumerate")
    E = net.edge_list
    subsets = [[frozenset(c) for n in range(K + 1) for c in itertools.combinations(desc.ids, n)
                if desc.rate * n <= cap + 1e-9] for _, _, cap in net.edges]
    for combo in itertools.product(*subsets):
        masks = dict(zip(E, combo))
        held = {}
        ok = True
        for v in net.topological_order():
            held[v] = set(desc.ids) if v in net.sources else set().union(
                *(masks[(u, v)] for u in net.predecessors(v)))
        for (u, v), m in masks.items():
            if not m <= held[u]:
                ok = False
                break
        if ok:
            yield masks, held
