"""End-to-end joint network-source coding experiments.

The pipeline solves cardinality rainbow flow on a network, reads off how many
distinct descriptions each sink gets, then fits the PET profile to those
counts. Sweeps over the number of descriptions, over network size and over
the two-description capacity are provided, plus an alternating refinement
that re-routes for the current code and re-fits the code for the new routes.
"""

from __future__ import annotations

import csv
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .crnf import (build_crnf_ilp, build_weighted_rnf_ilp, close_assignment, edge_masks_from_assignment,
                   extract_flow, spectra_to_assignment)
from .mdc import DRFS, OptimizationProblem, optimize_profile, ozarow_balanced_optimum, separate_coding_baseline
from .netgen import GrowthParams, Network, grow_dag, load_network
from .pet import PetProfile, level_distortions
from .rainbow import DescriptionSet, DistortionModel, is_admissible, rainbow_flow_vector, validate_flow
from .solver import solve

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-6


@dataclass
class ExperimentConfig:
    n_nodes: int = 50
    in_degree_draws: int = 3
    c_max: int = 3
    network_file: str | None = None
    rate: float = 1.0
    k_min: int = 1
    k_max: int = 8
    drf: str = "gaussian"
    weights: str = "uniform"
    seeds: list = field(default_factory=lambda: [0])
    output_dir: str | None = None
    time_limit: float | None = 5.0
    node_limit: int | None = None
    refinement: bool = False
    max_rounds: int = 10
    sizes: list = field(default_factory=lambda: [50, 100, 200])
    stop_on_convergence: bool = True
    tolerance: float = CONVERGENCE_TOL

    def __post_init__(self):
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ValueError("need 1 <= k_min <= k_max")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.drf not in DRFS:
            raise ValueError(f"unknown drf {self.drf!r}; known: {sorted(DRFS)}")
        if self.weights != "uniform":
            raise ValueError("only the 'uniform' weights policy is supported (override per sink in the network file)")

    def network(self, seed: int) -> Network:
        if self.network_file:
            return load_network(self.network_file)
        return grow_dag(GrowthParams(self.n_nodes, self.in_degree_draws, self.c_max, seed))

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        doc = json.loads(Path(path).read_text())
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config field(s) {sorted(unknown)}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**doc)


@dataclass
class Cell:
    """One (seed, K) run of the pipeline."""

    seed: int
    K: int
    objective: float
    bound: float
    status: str
    q: dict
    y: list
    dbar: float
    dbar_best: float
    solve_seconds: float
    total_seconds: float
    n_paths: int = 0
    carried: bool = False

    @property
    def gap(self) -> float:
        return self.bound - self.objective


@dataclass
class ExperimentReport:
    cells: list = field(default_factory=list)
    converged_at: dict = field(default_factory=dict)
    cdf: dict = field(default_factory=dict)
    refinement: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def series(self, seed) -> list[tuple[int, float]]:
        return [(c.K, c.dbar_best) for c in sorted(self.cells, key=lambda c: c.K) if c.seed == seed]


def _weights(net: Network) -> np.ndarray:
    return np.array([net.sink_weights[t] for t in sorted(net.sinks)])


def _rfv_from_assignment(model, x) -> dict[int, int]:
    net, desc = model.net, model.desc
    return {t: int(round(sum(x[model.node_vars[(t, k)]] for k in desc.ids))) for t in sorted(net.sinks)}


def fit_profile(net: Network, q: dict, K: int, rate: float, drf) -> tuple[np.ndarray, float]:
    problem = OptimizationProblem([q[t] for t in sorted(net.sinks)], _weights(net), rate, drf)
    if not net.sinks:
        return np.full(K, 1.0 / K), 0.0
    return optimize_profile(problem, K)


def pipeline_cell(net: Network, K: int, rate: float = 1.0, drf="gaussian", time_limit=None,
                  initial_masks: dict | None = None, node_limit=None):
    """Solve cardinality rainbow flow, then fit the PET profile to the resulting counts."""
    drf = DRFS[drf] if isinstance(drf, str) else drf
    desc = DescriptionSet(K, rate)
    t0 = time.perf_counter()
    model = build_crnf_ilp(net, desc)
    initial = None if initial_masks is None else spectra_to_assignment(model, initial_masks)
    sol = solve(model, time_limit=time_limit, node_limit=node_limit, initial=initial)
    if not sol.feasible:
        raise RuntimeError(f"no feasible flow for K={K} ({sol.status.value})")
    x = close_assignment(model, sol.assignment)
    flow = extract_flow(x, net, desc, model)
    problems = validate_flow(flow, net, desc)
    report = is_admissible(flow, net, desc)
    if problems or not report:
        raise RuntimeError(f"extracted flow failed validation: {problems or report.violations}")
    q = _rfv_from_assignment(model, x)
    if rainbow_flow_vector(flow, net, K).q != q:
        raise RuntimeError("flow spectra disagree with the solver's node variables")
    y, dbar = fit_profile(net, q, K, rate, drf)
    return sol, x, model, flow, q, y, dbar, time.perf_counter() - t0


def run_jnsc(config: ExperimentConfig) -> ExperimentReport:
    """Sweep K upward per seed until the optimized distortion stops improving.

    A K-description flow is also a valid (K+1)-description flow with the extra
    level unused, so ``dbar_best`` keeps the better of the fresh pipeline result
    and the previous K's design; ``dbar`` is the fresh result alone.
    """
    drf = DRFS[config.drf]
    report = ExperimentReport()
    for seed in config.seeds:
        net = config.network(seed)
        prev_best, prev_masks = None, None
        for K in range(config.k_min, config.k_max + 1):
            try:
                sol, x, model, flow, q, y, dbar, secs = pipeline_cell(
                    net, K, config.rate, drf, config.time_limit, prev_masks, config.node_limit)
            except RuntimeError as exc:
                log.error("seed %s K %s failed: %s", seed, K, exc)
                report.failures.append({"seed": seed, "K": K, "error": str(exc)})
                break
            best, carried = dbar, False
            if prev_best is not None and prev_best < dbar:
                best, carried = prev_best, True
            cell = Cell(seed, K, sol.objective_value, sol.bound, sol.status.value, q, y.tolist(), dbar,
                        best, sol.elapsed, secs, len(flow), carried)
            report.cells.append(cell)
            log.info("seed %s K %d objective %s (bound %s) dbar %.6g", seed, K, sol.objective_value,
                     sol.bound, dbar)
            improved = prev_best is None or prev_best - best >= config.tolerance
            if not improved and seed not in report.converged_at:
                report.converged_at[seed] = K - 1
                if config.stop_on_convergence:
                    break
            prev_best = best
            prev_masks = edge_masks_from_assignment(model, x)
    return report


def rfv_cdf(q_values, K: int) -> np.ndarray:
    """Fraction of sinks receiving at most k descriptions, k = 0..K."""
    q = np.asarray(list(q_values), dtype=int)
    if q.size == 0:
        return np.ones(K + 1)
    hist = np.bincount(q, minlength=K + 1)[:K + 1]
    return np.cumsum(hist) / q.size


def run_size_sweep(config: ExperimentConfig, K: int = 6) -> ExperimentReport:
    """Cumulative description-count fractions for each network size, averaged over seeds."""
    if not config.sizes:
        raise ValueError("sizes must be non-empty")
    report = ExperimentReport()
    for N in config.sizes:
        curves = []
        for seed in config.seeds:
            net = grow_dag(GrowthParams(N, config.in_degree_draws, config.c_max, seed))
            desc = DescriptionSet(K, config.rate)
            model = build_crnf_ilp(net, desc)
            sol = solve(model, time_limit=config.time_limit, node_limit=config.node_limit)
            if not sol.feasible:
                report.failures.append({"seed": seed, "N": N, "error": sol.status.value})
                continue
            x = close_assignment(model, sol.assignment)
            q = _rfv_from_assignment(model, x)
            curves.append(rfv_cdf(q.values(), K))
            report.cells.append(Cell(seed, K, sol.objective_value, sol.bound, sol.status.value, q, [],
                                     float("nan"), float("nan"), sol.elapsed, sol.elapsed, 0, False))
            report.cells[-1].n_nodes = N
        report.cdf[N] = np.mean(curves, axis=0) if curves else np.full(K + 1, np.nan)
    return report


def mean_normalized_count(report: ExperimentReport, N: int) -> float:
    vals = [sum(c.q.values()) / (c.K * len(c.q)) for c in report.cells if getattr(c, "n_nodes", None) == N]
    return float(np.mean(vals))


def run_ozarow_sweep(c_min: float = 0.1, c_max: float = 3.0, step: float = 0.1) -> list[dict]:
    if not 0 < c_min < c_max:
        raise ValueError("need 0 < c_min < c_max")
    n = int(round((c_max - c_min) / step)) + 1
    rows = []
    for C in np.round(c_min + step * np.arange(n), 12):
        D, avg = ozarow_balanced_optimum(float(C))
        sep = separate_coding_baseline(float(C))
        rows.append({"C": float(C), "D_star": D, "avg_mdc": avg, "avg_separate": sep, "ratio": avg / sep})
    return rows


def run_refinement(config: ExperimentConfig, K: int | None = None) -> ExperimentReport:
    """Alternate routing for the current code and code design for the current routes.

    Round 0 is the cardinality pipeline. Each later round solves the weighted
    flow program with level distortions taken from the current profile, seeded
    with the current flow, then re-fits the profile. The trace never increases.
    """
    drf = DRFS[config.drf]
    K = K or config.k_max
    report = ExperimentReport()
    for seed in config.seeds:
        net = config.network(seed)
        desc = DescriptionSet(K, config.rate)
        sol, x, model, flow, q, y, dbar, _ = pipeline_cell(net, K, config.rate, drf, config.time_limit,
                                                              node_limit=config.node_limit)
        trace = [dbar]
        masks = edge_masks_from_assignment(model, x)
        rounds = 0
        for rounds in range(1, config.max_rounds + 1):
            profile = PetProfile(tuple(y), config.rate)
            levels = DistortionModel(level_distortions(profile, drf))
            wmodel = build_weighted_rnf_ilp(net, desc, levels)
            start = spectra_to_assignment(wmodel, masks)
            wsol = solve(wmodel, time_limit=config.time_limit, node_limit=config.node_limit, initial=start)
            wx = close_assignment(wmodel, wsol.assignment)
            flow = extract_flow(wx, net, desc, wmodel)
            if validate_flow(flow, net, desc) or not is_admissible(flow, net, desc):
                raise RuntimeError("refined flow failed validation")
            new_q = _rfv_from_assignment(wmodel, wx)
            new_y, new_dbar = fit_profile(net, new_q, K, config.rate, drf)
            if new_dbar > trace[-1]:
                # only numerical noise can land here; keep the previous design
                new_q, new_y, new_dbar = q, y, trace[-1]
            improvement = trace[-1] - new_dbar
            trace.append(new_dbar)
            q, y, masks = new_q, new_y, edge_masks_from_assignment(wmodel, wx)
            if improvement < config.tolerance:
                break
        report.refinement[seed] = {"trace": trace, "rounds": rounds, "y": list(map(float, y)), "q": q}
    return report


# -- output files --------------------------------------------------------------

def write_distortion_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "K", "objective", "bound", "status", "dbar", "dbar_best"])
        for c in sorted(report.cells, key=lambda c: (c.seed, c.K)):
            w.writerow([c.seed, c.K, c.objective, c.bound, c.status, repr(c.dbar), repr(c.dbar_best)])


def write_cdf_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "k", "fraction"])
        for N in sorted(report.cdf):
            for k, f in enumerate(report.cdf[N]):
                w.writerow([N, k, repr(float(f))])


def write_ozarow_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, ["C", "D_star", "avg_mdc", "avg_separate", "ratio"])
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) for k, v in r.items()})


def write_manifest(path, config: ExperimentConfig | None, command: str, started: float, extra=None) -> None:
    import scipy

    doc = {
        "command": command,
        "config": asdict(config) if config is not None else None,
        "versions": {"jnsc": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "seconds": time.time() - started,
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, default=str))
