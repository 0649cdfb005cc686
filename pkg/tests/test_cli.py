"""End-to-end CLI tests: every subcommand in-process on small datasets,
exit codes, manifests, CSV schemas, reproducibility."""

import numpy as np
import pytest

from ufo import autodiff as ad
from ufo import benchmarks as bm
from ufo import dataio
from ufo.cli import (EXIT_NUMERICAL, EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE, main)
from ufo.metrics import MetricReport


def run(*args) -> int:
    return main([str(a) for a in args])


@pytest.fixture
def small_stepheat(tmp_path):
    train = tmp_path / "sh_train.ufod"
    test = tmp_path / "sh_test.ufod"
    assert run("generate", "stepheat", "--out", train, "--seed", 3, "--n", 6) == EXIT_OK
    assert run("generate", "stepheat", "--out", test, "--seed", 3,
               "--split", "test") == EXIT_OK
    return train, test


def test_generate_deterministic_bytes(tmp_path):
    a = tmp_path / "a.ufod"
    b = tmp_path / "b.ufod"
    assert run("generate", "burgers", "--lambda-range", 3, 6, "--n", 4,
               "--seed", 7, "--out", a) == EXIT_OK
    assert run("generate", "burgers", "--lambda-range", 3, 6, "--n", 4,
               "--seed", 7, "--out", b) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".ufod.manifest.txt").exists()
    assert (tmp_path / "a.ufod.run.txt").exists()
    ds = dataio.read_dataset(a)
    assert len(ds.samples) == 4
    lams = [s.scenario.params[0] for s in ds.samples]
    assert min(lams) >= 3.0 and max(lams) <= 6.0


def test_generate_grf_counts(tmp_path):
    out = tmp_path / "grf.ufod"
    assert run("generate", "grf_helmholtz", "--k", 60, "--ells", "0.1,0.2,0.3",
               "--n", 6, "--seed", 1, "--out", out) == EXIT_OK
    ds = dataio.read_dataset(out)
    assert len(ds.samples) == 6
    assert {s.scenario.params[0] for s in ds.samples} == {0.1, 0.2, 0.3}


def test_usage_errors():
    assert run("generate", "nope", "--out", "x.ufod") == EXIT_USAGE
    assert run("train", "--data", "missing.ufod", "--out", "x.ufoc") == EXIT_USAGE
    assert run() == EXIT_USAGE


def test_train_eval_cycle(tmp_path, small_stepheat):
    train, test = small_stepheat
    ckpt = tmp_path / "m.ufoc"
    assert run("train", "--data", train, "--model", "ufo", "--out", ckpt,
               "--epochs", 3, "--seed", 42, "--query-subsample", 128) == EXIT_OK
    assert ckpt.exists()
    assert (tmp_path / "m.ufoc.history.csv").read_text().startswith(
        "epoch,loss,wall_ms")

    results = tmp_path / "results.csv"
    assert run("eval", "--checkpoint", ckpt, "--data", test,
               "--out", results) == EXIT_OK
    lines = results.read_text().strip().splitlines()
    assert lines[0] == MetricReport.CSV_HEADER
    assert len(lines) == 1 + 6  # six canonical test scenarios
    # untrained-scale model: errors near 1, not absurd
    rel = [float(l.split(",")[4]) for l in lines[1:]]
    assert all(np.isfinite(rel))


def test_eval_benchmark_mismatch(tmp_path, small_stepheat):
    train, _ = small_stepheat
    ckpt = tmp_path / "m.ufoc"
    assert run("train", "--data", train, "--out", ckpt, "--epochs", 1,
               "--query-subsample", 64) == EXIT_OK
    other = tmp_path / "b.ufod"
    assert run("generate", "burgers", "--n", 2, "--seed", 0, "--out", other) == EXIT_OK
    assert run("eval", "--checkpoint", ckpt, "--data", other,
               "--out", tmp_path / "r.csv") == EXIT_USAGE


def test_ablate_emits_paired_csv(tmp_path, small_stepheat):
    train, test = small_stepheat
    out_dir = tmp_path / "abl"
    assert run("ablate", "--train-data", train, "--eval-data", test,
               "--out-dir", out_dir, "--seed", 42, "--epochs", 2,
               "--query-subsample", 64) == EXIT_OK
    lines = (out_dir / "ablation.csv").read_text().strip().splitlines()
    assert lines[0].startswith("benchmark,scenario,seed,full_rel_l2")
    assert len(lines) == 1 + 6
    assert (out_dir / "ufo.ufoc").exists() and (out_dir / "ufo_ablated.ufoc").exists()


def test_seeds_protocol_shape_and_reproducibility(tmp_path, small_stepheat):
    train, test = small_stepheat
    out1 = tmp_path / "s1"
    out2 = tmp_path / "s2"
    for out in (out1, out2):
        assert run("seeds", "--train-data", train, "--eval-data", test,
                   "--model", "ufo", "--out-dir", out, "--epochs", 2,
                   "--query-subsample", 64) == EXIT_OK
    res = (out1 / "results.csv").read_text().strip().splitlines()
    assert res[0] == MetricReport.CSV_HEADER
    body = res[1:]
    scenarios = {line.split(",")[1] for line in body}
    for scen in scenarios:
        rows = [l for l in body if l.split(",")[1] == scen]
        seeds = [l.split(",")[3] for l in rows]
        assert len([s for s in seeds if s != "aggregate"]) == 5
        assert seeds.count("aggregate") == 1
    summary = (out1 / "summary.csv").read_text()
    assert "rel_l2_mean" in summary and "rel_l2_std" in summary
    # five distinct checkpoints
    blobs = [(out1 / f"ufo_seed{s}.ufoc").read_bytes()
             for s in (42, 200, 500, 2010, 2026)]
    assert len({b for b in blobs}) == 5
    # bit-exact reproduction of every number (wall_ms is a timestamp, excluded)
    def strip_wall(path):
        return [",".join(l.split(",")[:-1]) for l in path.read_text().splitlines()]

    assert strip_wall(out1 / "results.csv") == strip_wall(out2 / "results.csv")
    assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()
    for s in (42, 200, 500, 2010, 2026):
        assert ((out1 / f"ufo_seed{s}.ufoc").read_bytes()
                == (out2 / f"ufo_seed{s}.ufoc").read_bytes())


def test_resolution_command(tmp_path):
    train = tmp_path / "bg.ufod"
    assert run("generate", "burgers", "--n", 4, "--seed", 2, "--out", train) == EXIT_OK
    ckpt = tmp_path / "bg.ufoc"
    assert run("train", "--data", train, "--out", ckpt, "--epochs", 2,
               "--query-subsample", 128) == EXIT_OK
    out = tmp_path / "res.csv"
    assert run("resolution", "--checkpoint", ckpt, "--mode", "output",
               "--grids", "50,80", "--lambda", "4.0", "--out", out) == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "resolution,rel_l2,barron_rel"
    assert len(lines) == 3

    out2 = tmp_path / "res_in.csv"
    assert run("resolution", "--checkpoint", ckpt, "--mode", "input",
               "--grids", "100,55", "--lambda", "4.0", "--out", out2) == EXIT_OK

    # non-Burgers checkpoint is rejected
    sh = tmp_path / "sh.ufod"
    assert run("generate", "stepheat", "--n", 2, "--seed", 0, "--out", sh) == EXIT_OK
    shc = tmp_path / "sh.ufoc"
    assert run("train", "--data", sh, "--out", shc, "--epochs", 1,
               "--query-subsample", 64) == EXIT_OK
    assert run("resolution", "--checkpoint", shc, "--mode", "output",
               "--grids", "50", "--out", tmp_path / "x.csv") == EXIT_USAGE


def test_gradcheck_command_passes():
    assert run("gradcheck", "--model", "ufo") == EXIT_OK
    assert run("gradcheck", "--model", "deeponet") == EXIT_OK


def test_gradcheck_all_models():
    assert run("gradcheck") == EXIT_OK


def test_gradcheck_detects_corrupted_backward(monkeypatch):
    """Negative control: poison the gelu backward rule and expect a nonzero
    exit from the gradient check."""
    true_gelu = ad.gelu

    def corrupted(a):
        out = true_gelu(a)
        if out.node is not None:
            orig = out.node.backward
            out.node.backward = lambda gs: tuple(
                None if g is None else 1.5 * g for g in orig(gs))
        return out

    monkeypatch.setattr(ad, "gelu", corrupted)
    assert run("gradcheck", "--model", "ufo") == EXIT_THRESHOLD


def test_config_file_provides_defaults_flags_win(tmp_path, small_stepheat):
    train, _ = small_stepheat
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epochs=1\nquery-subsample=64\n")
    ckpt = tmp_path / "c.ufoc"
    assert run("--config", cfg, "train", "--data", train, "--out", ckpt) == EXIT_OK
    hist = (tmp_path / "c.ufoc.history.csv").read_text().strip().splitlines()
    assert len(hist) == 2  # header + 1 epoch from the config file

    ckpt2 = tmp_path / "c2.ufoc"
    assert run("--config", cfg, "train", "--data", train, "--out", ckpt2,
               "--epochs", 2) == EXIT_OK
    hist2 = (tmp_path / "c2.ufoc.history.csv").read_text().strip().splitlines()
    assert len(hist2) == 3  # flag beat the file


def test_output_root_env(tmp_path, monkeypatch, small_stepheat):
    monkeypatch.setenv("UFO_OUTPUT_ROOT", str(tmp_path / "root"))
    assert run("generate", "stepheat", "--n", 2, "--seed", 1,
               "--out", "data/sh.ufod") == EXIT_OK
    assert (tmp_path / "root" / "data" / "sh.ufod").exists()
