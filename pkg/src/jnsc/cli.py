"""Command line entry points: ``crnf``, ``pet``, ``mdc`` and ``jnsc``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import crnf as crnf_mod
from . import experiments as ex
from .mdc import DRFS, OptimizationProblem, optimize_profile
from .netgen import load_network
from .pet import PetError, PetLayout, PetProfile, decode, encode, level_distortions, make_layout
from .rainbow import DescriptionSet, DistortionModel, flow_to_list, rainbow_flow_vector
from .solver import Status, solve

log = logging.getLogger("jnsc")


def _load_json_arg(value):
    """A JSON document given inline or as a path to a file."""
    p = Path(value)
    text = p.read_text() if p.exists() else value
    return json.loads(text)


def _dump(doc, out=None):
    text = json.dumps(doc, indent=1, default=float)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _setup_logging(verbose):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(msg, code=1):
    print(f"error: {msg}", file=sys.stderr)
    return code


# -- crnf -------------------------------------------------------------------------

def _crnf_solve(args):
    net = load_network(args.network)
    desc = DescriptionSet(args.descriptions, args.rate)
    if args.weighted:
        if args.delta is None:
            return _fail("--weighted needs --delta")
        levels = DistortionModel(tuple(_load_json_arg(args.delta)))
        model = crnf_mod.build_weighted_rnf_ilp(net, desc, levels)
    else:
        model = crnf_mod.build_crnf_ilp(net, desc)
    sol = solve(model, time_limit=args.time_limit)
    if not sol.feasible:
        return _fail(f"no solution ({sol.status.value})")
    x = crnf_mod.close_assignment(model, sol.assignment)
    flow = crnf_mod.extract_flow(x, net, desc, model)
    rfv = rainbow_flow_vector(flow, net, desc.count)
    doc = {
        "status": sol.status.value,
        "objective": sol.objective_value,
        "bound": sol.bound,
        "gap": sol.gap,
        "seconds": sol.elapsed,
        "q": {str(t): v for t, v in sorted(rfv.q.items())},
        "flow": flow_to_list(flow),
    }
    _dump(doc, args.out)
    return 0


# -- pet --------------------------------------------------------------------------

def _sha(bits: np.ndarray) -> str:
    return hashlib.sha256(np.packbits(bits).tobytes() + str(bits.size).encode()).hexdigest()


def _pet_encode(args):
    y = _load_json_arg(args.profile)
    profile = PetProfile(tuple(y), args.rate)
    layout = make_layout(profile, args.block)
    bits = np.unpackbits(np.frombuffer(Path(args.input).read_bytes(), dtype=np.uint8))
    rows = encode(bits, layout, profile)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payloads = []
    for i, row in enumerate(rows, start=1):
        name = f"description_{i:02d}.bin"
        (out / name).write_bytes(np.packbits(row).tobytes())
        payloads.append({"index": i, "file": name, "sha256": _sha(row)})
    manifest = {
        "K": layout.K,
        "rate": args.rate,
        "block_length": layout.block_length,
        "widths": list(layout.widths),
        "prefix_lengths": list(layout.prefix_lengths),
        "row_bits": layout.row_bits,
        "profile": list(profile.levels),
        "source_sha256": _sha(bits[:layout.source_bits]),
        "payloads": payloads,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    print(f"wrote {layout.K} descriptions of {layout.row_bits} bits; {layout.source_bits} source bits used")
    return 0


def _pet_decode(args):
    manifest = json.loads(Path(args.manifest).read_text())
    layout = PetLayout(manifest["block_length"], manifest["K"], tuple(manifest["widths"]))
    by_hash = {p["sha256"]: p["index"] for p in manifest["payloads"]}
    files = []
    for f in map(Path, args.shares):
        files += sorted(f.glob("description_*.bin")) if f.is_dir() else [f]
    received = {}
    for f in files:
        raw = np.unpackbits(np.frombuffer(Path(f).read_bytes(), dtype=np.uint8))[:layout.row_bits]
        index = by_hash.get(_sha(raw))
        if index is None:
            return _fail(f"{f} does not match any description in the manifest (corrupt or foreign)")
        if index in received:
            return _fail(f"{f} duplicates description {index}")
        received[index] = raw
    try:
        bits = decode(received, layout)
    except PetError as exc:
        return _fail(str(exc))
    Path(args.out).write_bytes(np.packbits(bits).tobytes())
    print(f"recovered {bits.size} bits from {len(received)} descriptions")
    return 0


# -- mdc --------------------------------------------------------------------------

def _mdc_optimize(args):
    rfv = _load_json_arg(args.rfv)
    weights = _load_json_arg(args.weights) if args.weights else None
    if isinstance(rfv, dict):
        rfv = {int(k): v for k, v in rfv.items()}
        if isinstance(weights, dict):
            weights = {int(k): v for k, v in weights.items()}
    drf = DRFS[args.drf]
    problem = OptimizationProblem(rfv, weights, args.rate, drf)
    y, value = optimize_profile(problem, args.descriptions)
    levels = level_distortions(PetProfile(tuple(y), args.rate), drf)
    _dump({"y": list(map(float, y)), "objective": value,
           "pet_distortion": {str(k): d for k, d in enumerate(levels)}})
    return 0


def _mdc_ozarow(args):
    rows = ex.run_ozarow_sweep(args.cmin, args.cmax, args.step)
    w = csv.DictWriter(sys.stdout, ["C", "D_star", "avg_mdc", "avg_separate", "ratio"])
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return 0


# -- jnsc -------------------------------------------------------------------------

def _config(args):
    overrides = {"output_dir": args.output_dir, "time_limit": args.time_limit,
                 "k_min": args.k_min, "k_max": args.k_max}
    if args.seeds:
        overrides["seeds"] = args.seeds
    cfg = ex.ExperimentConfig.from_file(args.config, **overrides) if args.config else \
        ex.ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    out = Path(cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _jnsc_run(args):
    started = time.time()
    cfg, out = _config(args)
    report = ex.run_jnsc(cfg)
    ex.write_distortion_csv(report, out / "distortion_vs_k.csv")
    timed_out = [(c.seed, c.K) for c in report.cells if c.status != Status.OPTIMAL.value]
    ex.write_manifest(out / "run_manifest.json", cfg, "run", started,
                      {"converged_at": report.converged_at, "failures": report.failures,
                       "gapped_cells": timed_out})
    for seed in cfg.seeds:
        print(f"seed {seed}: " + " ".join(f"K={K}:{d:.5g}" for K, d in report.series(seed)))
    return 2 if report.failures else 0


def _jnsc_size_sweep(args):
    started = time.time()
    cfg, out = _config(args)
    report = ex.run_size_sweep(cfg, K=args.descriptions)
    ex.write_cdf_csv(report, out / "rfv_cdf.csv")
    ex.write_manifest(out / "run_manifest.json", cfg, "size-sweep", started,
                      {"failures": report.failures,
                       "mean_normalized_count": {N: ex.mean_normalized_count(report, N) for N in cfg.sizes}})
    for N in sorted(report.cdf):
        print(N, " ".join(f"{f:.3f}" for f in report.cdf[N]))
    return 2 if report.failures else 0


def _jnsc_ozarow(args):
    started = time.time()
    out = Path(args.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    rows = ex.run_ozarow_sweep(args.cmin, args.cmax, args.step)
    ex.write_ozarow_csv(rows, out / "ozarow.csv")
    ex.write_manifest(out / "run_manifest.json", None, "ozarow", started,
                      {"cmin": args.cmin, "cmax": args.cmax, "step": args.step})
    print(f"{len(rows)} points, max ratio {max(r['ratio'] for r in rows):.6f}")
    return 0


def _jnsc_refine(args):
    started = time.time()
    cfg, out = _config(args)
    try:
        report = ex.run_refinement(cfg)
    except RuntimeError as exc:
        return _fail(str(exc), 2)
    ex.write_manifest(out / "run_manifest.json", cfg, "refine", started,
                      {"refinement": report.refinement})
    for seed, r in report.refinement.items():
        print(f"seed {seed}: rounds {r['rounds']} trace " + " ".join(f"{d:.6g}" for d in r["trace"]))
    return 0


# -- parsers ----------------------------------------------------------------------

def _run(parser, argv):
    args = parser.parse_args(argv)
    _setup_logging(getattr(args, "verbose", False))
    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        return _fail(str(exc))


def crnf_main(argv=None):
    p = argparse.ArgumentParser(prog="crnf", description="Rainbow network flow routing.")
    sub = p.add_subparsers()
    s = sub.add_parser("solve", help="solve the cardinality (or weighted) rainbow flow program")
    s.add_argument("--network", required=True, help="network JSON file")
    s.add_argument("--descriptions", "-K", type=int, required=True)
    s.add_argument("--rate", type=float, default=1.0)
    s.add_argument("--weighted", action="store_true", help="minimize weighted level distortion")
    s.add_argument("--delta", help="JSON list delta(0..K), inline or a file")
    s.add_argument("--time-limit", type=float)
    s.add_argument("--out", help="write the report here instead of stdout")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=_crnf_solve)
    return _run(p, argv)


def pet_main(argv=None):
    p = argparse.ArgumentParser(prog="pet", description="Priority encoding transmission codec.")
    sub = p.add_subparsers()
    e = sub.add_parser("encode")
    e.add_argument("--profile", required=True, help="JSON list y_1..y_K, inline or a file")
    e.add_argument("--rate", type=float, default=1.0)
    e.add_argument("--block", type=int, required=True, help="block length n")
    e.add_argument("--in", dest="input", required=True, help="source bitstream (raw bytes)")
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=_pet_encode)
    d = sub.add_parser("decode")
    d.add_argument("--manifest", required=True)
    d.add_argument("--shares", nargs="+", required=True,
                   help="description files, or directories holding description_*.bin")
    d.add_argument("--out", required=True, help="file for the recovered prefix")
    d.set_defaults(func=_pet_decode)
    return _run(p, argv)


def mdc_main(argv=None):
    p = argparse.ArgumentParser(prog="mdc", description="Multiple description code design.")
    sub = p.add_subparsers()
    o = sub.add_parser("optimize")
    o.add_argument("--rfv", required=True, help="JSON list or {sink: q} map, inline or a file")
    o.add_argument("--rate", type=float, default=1.0)
    o.add_argument("--descriptions", "-K", type=int, required=True)
    o.add_argument("--weights")
    o.add_argument("--drf", default="gaussian", choices=sorted(DRFS))
    o.set_defaults(func=_mdc_optimize)
    z = sub.add_parser("ozarow")
    z.add_argument("--cmin", type=float, default=0.1)
    z.add_argument("--cmax", type=float, default=3.0)
    z.add_argument("--step", type=float, default=0.1)
    z.set_defaults(func=_mdc_ozarow)
    return _run(p, argv)


def jnsc_main(argv=None):
    p = argparse.ArgumentParser(prog="jnsc", description="Joint network-source coding experiments.")
    sub = p.add_subparsers()

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--output-dir")
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--k-min", type=int)
        sp.add_argument("--k-max", type=int)
        sp.add_argument("--seeds", type=int, nargs="+")
        sp.add_argument("-v", "--verbose", action="store_true")

    r = sub.add_parser("run", help="sweep K until the distortion converges")
    common(r)
    r.set_defaults(func=_jnsc_run)
    s = sub.add_parser("size-sweep", help="description-count distribution vs network size")
    common(s)
    s.add_argument("--descriptions", "-K", type=int, default=6)
    s.set_defaults(func=_jnsc_size_sweep)
    z = sub.add_parser("ozarow", help="two-description Gaussian ratio curve")
    z.add_argument("--cmin", type=float, default=0.1)
    z.add_argument("--cmax", type=float, default=3.0)
    z.add_argument("--step", type=float, default=0.1)
    z.add_argument("--output-dir")
    z.set_defaults(func=_jnsc_ozarow)
    f = sub.add_parser("refine", help="alternate routing and code design")
    common(f)
    f.set_defaults(func=_jnsc_refine)
    return _run(p, argv)


if __name__ == "__main__":
    sys.exit(jnsc_main())
