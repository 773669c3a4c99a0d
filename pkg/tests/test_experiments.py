import csv
import json

import numpy as np
import pytest

from jnsc import cli
from jnsc import experiments as ex
from jnsc.crnf import all_admissible_edge_masks
from jnsc.mdc import DRFS, DistortionRate, OptimizationProblem, gaussian_drf, optimize_profile
from jnsc.netgen import fig1_network, save_network
from jnsc.pet import PetProfile, level_distortions
from jnsc.rainbow import DescriptionSet


@pytest.fixture
def fig1_file(tmp_path):
    path = tmp_path / "fig1.json"
    save_network(fig1_network(1), path)
    return str(path)


def test_fixture_pipeline_matches_direct_optimizer():
    sol, x, model, flow, q, y, dbar, _ = ex.pipeline_cell(fig1_network(1), 2)
    assert sol.objective_value == 6
    assert q == {2: 1, 3: 1, 4: 2, 5: 2}
    y_ref, d_ref = optimize_profile(OptimizationProblem([1, 1, 2, 2]), 2)
    np.testing.assert_allclose(y, y_ref)
    assert dbar == pytest.approx(d_ref)


def test_single_description_run(fig1_file):
    cfg = ex.ExperimentConfig(network_file=fig1_file, k_min=1, k_max=1, seeds=[0])
    report = ex.run_jnsc(cfg)
    (cell,) = report.cells
    assert cell.y == [1.0]
    q = cell.q
    expected = np.mean([gaussian_drf(min(q[t], 1)) for t in sorted(q)])
    assert cell.dbar == pytest.approx(expected)


def test_config_validation(tmp_path):
    for bad in [dict(k_min=0), dict(k_min=3, k_max=2), dict(seeds=[]), dict(rate=0), dict(drf="laplace"),
                dict(weights="random")]:
        with pytest.raises(ValueError):
            ex.ExperimentConfig(**bad)
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"n_nodes": 20, "seeds": [1, 2], "bogus": 1}))
    with pytest.raises(ValueError, match="bogus"):
        ex.ExperimentConfig.from_file(p)
    p.write_text(json.dumps({"n_nodes": 20, "seeds": [1, 2]}))
    cfg = ex.ExperimentConfig.from_file(p, k_max=4, time_limit=None)
    assert cfg.n_nodes == 20 and cfg.k_max == 4 and cfg.time_limit == 5.0


def test_k_sweep_monotone_and_converges():
    cfg = ex.ExperimentConfig(n_nodes=30, k_max=6, seeds=[3, 4], time_limit=3.0, stop_on_convergence=False)
    report = ex.run_jnsc(cfg)
    for seed in cfg.seeds:
        series = [d for _, d in report.series(seed)]
        assert len(series) == 6
        assert all(b <= a for a, b in zip(series, series[1:]))
        assert seed in report.converged_at
    for c in report.cells:
        assert c.dbar_best <= c.dbar + 1e-15
        assert abs(sum(c.y) - 1) < 1e-9 and min(c.y) >= 0
        hist = np.bincount(list(c.q.values()), minlength=c.K + 1)
        assert hist.sum() == len(c.q)


def test_majority_of_seeds_converge_in_range():
    cfg = ex.ExperimentConfig(n_nodes=50, k_max=8, seeds=list(range(20)), time_limit=2.0)
    report = ex.run_jnsc(cfg)
    at = [report.converged_at.get(s) for s in cfg.seeds]
    assert sum(1 for k in at if k is not None and 4 <= k <= 8) > 10


def test_rfv_cdf():
    cdf = ex.rfv_cdf([0, 1, 1, 3], 3)
    np.testing.assert_allclose(cdf, [0.25, 0.75, 0.75, 1.0])
    assert np.all(np.diff(cdf) >= 0)


def test_size_sweep_small():
    cfg = ex.ExperimentConfig(seeds=[1], sizes=[20], time_limit=2.0)
    rep = ex.run_size_sweep(cfg, K=3)
    cdf = rep.cdf[20]
    assert cdf.shape == (4,) and cdf[-1] == pytest.approx(1.0)
    assert np.all(np.diff(cdf) >= 0)
    rep1 = ex.run_size_sweep(cfg, K=1)
    assert rep1.cdf[20].shape == (2,) and rep1.cdf[20][-1] == 1.0
    with pytest.raises(ValueError):
        ex.run_size_sweep(ex.ExperimentConfig(sizes=[]), K=2)


def test_ozarow_sweep():
    rows = ex.run_ozarow_sweep(0.1, 3.0, 0.1)
    assert len(rows) == 30
    assert all(0 < r["ratio"] < 1 for r in rows)
    with pytest.raises(ValueError):
        ex.run_ozarow_sweep(0.0, 1.0, 0.1)


def test_refinement_fig1_fixpoint(fig1_file):
    cfg = ex.ExperimentConfig(network_file=fig1_file, k_max=2, seeds=[0], max_rounds=5)
    rep = ex.run_refinement(cfg)
    r = rep.refinement[0]
    assert r["rounds"] <= 2
    trace = r["trace"]
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    # no admissible flow does better for the final code, and no code does better for the final flow
    net, desc = fig1_network(1), DescriptionSet(2)
    lv = level_distortions(PetProfile(tuple(r["y"])), gaussian_drf)
    best = min(np.mean([lv[len(held[t])] for t in sorted(net.sinks)])
               for _, held in all_admissible_edge_masks(net, desc))
    assert trace[-1] == pytest.approx(best, abs=1e-9)
    _, d = optimize_profile(OptimizationProblem([r["q"][t] for t in sorted(r["q"])]), 2)
    assert trace[-1] == pytest.approx(d, abs=1e-9)


def test_refinement_flat_drf_stops_after_one_round(monkeypatch):
    def flat(R):
        return np.ones_like(np.asarray(R, dtype=float))

    monkeypatch.setitem(DRFS, "flat", DistortionRate(flat, lambda R: 0.0 * flat(R), "flat"))
    cfg = ex.ExperimentConfig(n_nodes=15, k_max=3, seeds=[2], drf="flat")
    first = ex.pipeline_cell(cfg.network(2), 3, drf="flat")
    rep = ex.run_refinement(cfg)
    assert rep.refinement[2]["rounds"] == 1
    assert rep.refinement[2]["q"] == first[4]


def test_refinement_not_worse_than_pipeline():
    cfg = ex.ExperimentConfig(n_nodes=25, k_max=4, seeds=[5, 6], time_limit=3.0)
    rep = ex.run_refinement(cfg)
    for seed in cfg.seeds:
        trace = rep.refinement[seed]["trace"]
        assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_output_writers(tmp_path):
    cfg = ex.ExperimentConfig(n_nodes=12, k_max=2, seeds=[1])
    rep = ex.run_jnsc(cfg)
    ex.write_distortion_csv(rep, tmp_path / "d.csv")
    rows = list(csv.DictReader(open(tmp_path / "d.csv")))
    assert [r["K"] for r in rows] == ["1", "2"]
    assert {"seed", "K", "objective", "dbar"} <= set(rows[0])
    ex.write_manifest(tmp_path / "m.json", cfg, "run", 0.0)
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["config"]["seeds"] == [1] and "numpy" in doc["versions"]


def test_reports_reproducible():
    # a node budget instead of a clock keeps truncated searches deterministic
    cfg = ex.ExperimentConfig(n_nodes=50, k_min=6, k_max=7, seeds=[8], time_limit=None, node_limit=30,
                              stop_on_convergence=False)
    a, b = ex.run_jnsc(cfg), ex.run_jnsc(cfg)
    assert [(c.K, c.objective, c.q, c.y, c.dbar) for c in a.cells] == \
           [(c.K, c.objective, c.q, c.y, c.dbar) for c in b.cells]


# -- command line -----------------------------------------------------------------

def test_cli_crnf(fig1_file, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.crnf_main(["solve", "--network", fig1_file, "-K", "2", "--rate", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["objective"] == 6 and doc["q"] == {"2": 1, "3": 1, "4": 2, "5": 2}
    assert len(doc["flow"]) == 4
    assert cli.crnf_main(["solve", "--network", fig1_file, "-K", "2", "--weighted",
                          "--delta", "[1, 0.5, 0.1]"]) == 0
    assert json.loads(capsys.readouterr().out)["objective"] == pytest.approx(2.8)
    assert cli.crnf_main(["solve", "--network", fig1_file, "-K", "2", "--weighted"]) != 0


def test_cli_pet_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    raw = rng.integers(0, 256, 64, dtype=np.uint8).tobytes()
    (tmp_path / "src.raw").write_bytes(raw)
    enc = tmp_path / "enc"
    assert cli.pet_main(["encode", "--profile", "[0.25, 0.25, 0.5]", "--block", "96",
                         "--in", str(tmp_path / "src.raw"), "--out", str(enc)]) == 0
    manifest = json.loads((enc / "manifest.json").read_text())
    assert manifest["K"] == 3 and manifest["widths"] == [24, 24, 48]
    assert manifest["prefix_lengths"] == [0, 24, 72, 216]
    shares = [str(enc / p["file"]) for p in manifest["payloads"]]
    src_bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    for subset, n in [([shares[2]], 24), ([shares[0], shares[2]], 72), (shares, 216)]:
        out = tmp_path / "rec.bin"
        assert cli.pet_main(["decode", "--manifest", str(enc / "manifest.json"), "--shares", *subset,
                             "--out", str(out)]) == 0
        got = np.unpackbits(np.frombuffer(out.read_bytes(), dtype=np.uint8))[:n]
        assert np.array_equal(got, src_bits[:n])
    # a directory of shares works too
    out = tmp_path / "dir.bin"
    assert cli.pet_main(["decode", "--manifest", str(enc / "manifest.json"), "--shares", str(enc),
                         "--out", str(out)]) == 0
    assert np.array_equal(np.unpackbits(np.frombuffer(out.read_bytes(), dtype=np.uint8))[:216], src_bits[:216])
    # a corrupted share is refused
    bad = bytearray((enc / manifest["payloads"][0]["file"]).read_bytes())
    bad[0] ^= 1
    (tmp_path / "bad.bin").write_bytes(bytes(bad))
    assert cli.pet_main(["decode", "--manifest", str(enc / "manifest.json"), "--shares",
                         str(tmp_path / "bad.bin"), "--out", str(tmp_path / "x")]) != 0


def test_cli_mdc(capsys):
    assert cli.mdc_main(["optimize", "--rfv", "[1,1,1,2,2,2,2,3]", "-K", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert np.allclose(doc["y"], [0.82, 0.18, 0], atol=0.01)
    assert set(doc["pet_distortion"]) == {"0", "1", "2", "3"}
    assert cli.mdc_main(["ozarow", "--cmin", "0.5", "--cmax", "1.0", "--step", "0.25"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "C,D_star,avg_mdc,avg_separate,ratio" and len(lines) == 4
    assert cli.mdc_main(["optimize", "--rfv", "[4]", "-K", "3"]) != 0


def test_cli_jnsc(tmp_path, fig1_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"network_file": fig1_file, "k_max": 3, "seeds": [0], "sizes": [15]}))
    out = tmp_path / "out"
    assert cli.jnsc_main(["run", "--config", str(cfg), "--output-dir", str(out)]) == 0
    assert (out / "distortion_vs_k.csv").exists() and (out / "run_manifest.json").exists()
    assert cli.jnsc_main(["size-sweep", "--config", str(cfg), "--output-dir", str(out), "-K", "2"]) == 0
    assert (out / "rfv_cdf.csv").exists()
    assert cli.jnsc_main(["ozarow", "--output-dir", str(out)]) == 0
    assert len((out / "ozarow.csv").read_text().splitlines()) == 31
    assert cli.jnsc_main(["refine", "--config", str(cfg), "--output-dir", str(out)]) == 0
    assert "refinement" in json.loads((out / "run_manifest.json").read_text())
    assert cli.jnsc_main(["run", "--config", str(tmp_path / "missing.json")]) != 0
