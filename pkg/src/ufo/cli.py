"""Command-line entry point: dataset generation, training, evaluation,
ablation, multi-seed sweeps, resolution studies, and gradient checks.

Every subcommand writes a plain-text run manifest next to its primary
output (command line, config hash, seeds, git describe, timestamps, output
paths), and all result tables are CSV for external plotting.

Exit codes: 0 success, 1 usage error, 2 numerical failure (NaN/solver),
3 threshold failure in check commands.

Flags win over the optional key=value config file (--config); the only
environment variable honored is UFO_OUTPUT_ROOT, which prefixes relative
output paths.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import benchmarks as bm
from . import dataio
from . import model as mdl
from . import training as tr
from .autodiff import GradCheckError
from .deeponet import deeponet_forward, init_deeponet_params, toy_deeponet_config
from .metrics import MetricReport
from .numerics import FactorizationError, SolverError

log = logging.getLogger("ufo.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_THRESHOLD = 3

GRADCHECK_THRESHOLD = 1e-4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _output_root(ns) -> Path:
    root = ns.output_root or os.environ.get("UFO_OUTPUT_ROOT") or "."
    return Path(root)


def _resolve(ns, path: str | Path) -> Path:
    path = Path(path)
    return path if path.is_absolute() else _output_root(ns) / path


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def _config_hash(ns) -> str:
    payload = {k: v for k, v in sorted(vars(ns).items())
               if k not in ("func", "output_root")}
    return hashlib.sha256(json.dumps(payload, sort_keys=True,
                                     default=str).encode()).hexdigest()[:16]


def _write_run_manifest(primary_output: Path, ns, outputs: list[Path],
                        seeds) -> Path:
    lines = [
        f"command: {' '.join(sys.argv) if sys.argv else 'ufo'}",
        f"config_hash: {_config_hash(ns)}",
        f"dataset_seeds: {seeds}",
        f"git: {_git_describe()}",
        f"timestamp: {time.strftime('%Y-%m-%dT%H:%M:%S')}",
        "outputs:",
    ]
    lines += [f"  - {p}" for p in outputs]
    path = Path(str(primary_output) + ".run.txt")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _UsageError(f"config file line is not key=value: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _effective(ns, key: str, cast, fallback):
    """Flag value if given, else config-file value, else fallback."""
    flag = getattr(ns, key, None)
    if flag is not None:
        return flag
    cfg = getattr(ns, "_file_config", {})
    if key in cfg:
        return cast(cfg[key])
    return fallback


def _write_reports_csv(path: Path, reports: list[MetricReport],
                       extra_rows: list[str] | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [MetricReport.CSV_HEADER]
    lines += [r.csv_row() for r in reports]
    if extra_rows:
        lines += extra_rows
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(ns) -> int:
    benchmark = ns.benchmark
    split = _effective(ns, "split", str, "train")
    spec = bm.default_spec(benchmark, split=split)
    n = _effective(ns, "n", int, spec.n_samples)
    kwargs = dict(benchmark=benchmark, n_samples=n, split=split)
    if benchmark == "grf_helmholtz":
        ells = _effective(ns, "ells", str, None)
        kwargs["ells"] = (tuple(float(e) for e in ells.split(","))
                          if ells else spec.ells)
        kwargs["k"] = _effective(ns, "k", float, spec.k)
        kwargs["grf_mode"] = _effective(
            ns, "grf_mode", str, "train" if split == "train" else "eval")
    else:
        if ns.param_range is not None:
            kwargs["param_range"] = tuple(ns.param_range)
        else:
            kwargs["param_range"] = spec.param_range
        if benchmark == "delta_helmholtz":
            kwargs["input_mode"] = _effective(ns, "input_mode", str, "nonuniform")
    out = _resolve(ns, ns.out)
    dataset = bm.make_dataset(bm.BenchmarkSpec(**kwargs), seed=ns.seed)
    data_path = dataio.write_dataset(dataset, out)
    manifest = dataio.write_manifest(dataset, data_path)
    _write_run_manifest(data_path, ns, [data_path, manifest], seeds=ns.seed)
    print(f"wrote {len(dataset.samples)} samples to {data_path}")
    return EXIT_OK


def _train_config_from_flags(ns, benchmark: str, model: str,
                             seed: int) -> tr.TrainConfig:
    preset = tr._PRESETS[(benchmark, model)]
    return tr.TrainConfig(
        benchmark=benchmark,
        model=model,
        epochs=_effective(ns, "epochs", int, preset["epochs"]),
        batch_size=_effective(ns, "batch_size", int, 16),
        lr=_effective(ns, "lr", float, preset["lr"]),
        lr_min=_effective(ns, "lr_min", float, 1e-5),
        lr_schedule=_effective(ns, "lr_schedule", str, "cosine"),
        seed=seed,
        query_subsample=_effective(ns, "query_subsample", int,
                                   preset["query_subsample"]),
        activation=_effective(ns, "activation", str, "gelu"),
    )


def cmd_train(ns) -> int:
    dataset = dataio.read_dataset(_resolve(ns, ns.data))
    config = _train_config_from_flags(ns, dataset.benchmark, ns.model, ns.seed)
    out = _resolve(ns, ns.out)
    history_path = Path(str(out) + ".history.csv")
    ckpt, history = tr.train(dataset, config, history_path=history_path)
    if ckpt.epoch < config.epochs or not np.isfinite(ckpt.final_loss):
        tr.save_checkpoint(ckpt, out)
        print("training aborted on non-finite loss; last-good checkpoint kept",
              file=sys.stderr)
        return EXIT_NUMERICAL
    path = tr.save_checkpoint(ckpt, out)
    n_params = sum(t.size for t in ckpt.tensors.values())
    _write_run_manifest(path, ns, [path, history_path], seeds=ns.seed)
    print(f"trained {config.model} on {dataset.benchmark}: "
          f"{len(history)} epochs, final loss {ckpt.final_loss:.3e}, "
          f"{n_params} trainable parameters -> {path}")
    return EXIT_OK


def cmd_eval(ns) -> int:
    ckpt = tr.load_checkpoint(_resolve(ns, ns.checkpoint))
    dataset = dataio.read_dataset(_resolve(ns, ns.data))
    if dataset.benchmark != ckpt.benchmark:
        raise _UsageError(f"checkpoint is for {ckpt.benchmark}, dataset is "
                          f"{dataset.benchmark}")
    params = tr.params_from_checkpoint(ckpt)
    seed = ckpt.config["train"]["seed"]
    reports = tr.evaluate(params, ckpt.model, ckpt.benchmark, dataset.samples,
                          seed=seed)
    out = _write_reports_csv(_resolve(ns, ns.out), reports)
    _write_run_manifest(out, ns, [out], seeds=seed)
    for r in reports:
        print(r.csv_row())
    return EXIT_OK


def cmd_ablate(ns) -> int:
    train_ds = dataio.read_dataset(_resolve(ns, ns.train_data))
    eval_ds = dataio.read_dataset(_resolve(ns, ns.eval_data))
    out_dir = _resolve(ns, ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = {}
    outputs = []
    for model in ("ufo", "ufo_ablated"):
        config = _train_config_from_flags(ns, train_ds.benchmark, model, ns.seed)
        ckpt, _ = tr.train(train_ds, config,
                           history_path=out_dir / f"history_{model}.csv")
        cpath = tr.save_checkpoint(ckpt, out_dir / f"{model}.ufoc")
        outputs.append(cpath)
        params = tr.params_from_checkpoint(ckpt)
        for rep in tr.evaluate(params, model, train_ds.benchmark,
                               eval_ds.samples, seed=ns.seed):
            rows.setdefault(rep.scenario, {})[model] = rep

    lines = ["benchmark,scenario,seed,full_rel_l2,full_barron_rel,"
             "ablated_rel_l2,ablated_barron_rel,rel_l2_ratio"]
    for scen, pair in rows.items():
        full, abl = pair["ufo"], pair["ufo_ablated"]
        ratio = abl.rel_l2 / full.rel_l2 if full.rel_l2 > 0 else float("inf")
        lines.append(f"{train_ds.benchmark},{scen},{ns.seed},"
                     f"{full.rel_l2:.8g},{full.barron_rel:.8g},"
                     f"{abl.rel_l2:.8g},{abl.barron_rel:.8g},{ratio:.6g}")
    csv_path = out_dir / "ablation.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    outputs.append(csv_path)
    _write_run_manifest(csv_path, ns, outputs, seeds=ns.seed)
    print("\n".join(lines))
    return EXIT_OK


def cmd_seeds(ns) -> int:
    train_ds = dataio.read_dataset(_resolve(ns, ns.train_data))
    eval_ds = dataio.read_dataset(_resolve(ns, ns.eval_data))
    out_dir = _resolve(ns, ns.out_dir)
    overrides = {}
    for key in ("epochs", "lr", "query_subsample", "batch_size"):
        val = getattr(ns, key, None)
        if val is not None:
            overrides[key] = val
    reports, aggregates, ckpts = tr.run_seed_protocol(
        train_ds, eval_ds, train_ds.benchmark, ns.model, out_dir, **overrides)

    # per-scenario aggregate rows appended to the standard results schema
    agg_rows = []
    for agg in aggregates:
        agg_rows.append(f"{agg['benchmark']},{agg['scenario']},{agg['model']},"
                        f"aggregate,{agg['rel_l2_mean']:.8g},"
                        f"{agg['barron_rel_mean']:.8g},0,0,0.000")
    results_path = _write_reports_csv(out_dir / "results.csv", reports, agg_rows)

    summary_lines = ["benchmark,scenario,model,n_seeds,rel_l2_mean,rel_l2_std,"
                     "barron_rel_mean,barron_rel_std"]
    for agg in aggregates:
        summary_lines.append(
            f"{agg['benchmark']},{agg['scenario']},{agg['model']},"
            f"{agg['n_seeds']},{agg['rel_l2_mean']:.8g},{agg['rel_l2_std']:.8g},"
            f"{agg['barron_rel_mean']:.8g},{agg['barron_rel_std']:.8g}")
    summary_path = out_dir / "summary.csv"
    summary_path.write_text("\n".join(summary_lines) + "\n")
    _write_run_manifest(results_path, ns, [results_path, summary_path, *ckpts],
                        seeds=list(tr.DEFAULT_SEEDS))
    for line in summary_lines:
        print(line)
    return EXIT_OK


def cmd_resolution(ns) -> int:
    ckpt = tr.load_checkpoint(_resolve(ns, ns.checkpoint))
    grids = [int(g) for g in ns.grids.split(",")]
    results = tr.resolution_study(ckpt, ns.mode, grids, lam=ns.lam)
    lines = ["resolution,rel_l2,barron_rel"]
    lines += [f"{g},{r.rel_l2:.8g},{r.barron_rel:.8g}" for g, r in results]
    out = _resolve(ns, ns.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    _write_run_manifest(out, ns, [out], seeds=ckpt.config["train"]["seed"])
    print("\n".join(lines))
    return EXIT_OK


def _gradcheck_once(model: str) -> float:
    rng = np.random.default_rng(2024)
    if model == "deeponet":
        params = init_deeponet_params(toy_deeponet_config(), seed=11)
        sv = rng.standard_normal(5)
        qc = rng.uniform(0, 1, (3, 2))

        def forward():
            return ad.reduce_sum(ad.square(deeponet_forward(params, sv, qc)))

        return ad.grad_check(forward, dict(params.named_tensors()), h=1e-5)

    params = mdl.init_ufo_params(mdl.toy_config(), seed=11,
                                 ablated=model == "ufo_ablated")
    ic = rng.uniform(0, 1, (5, 1))
    iv = rng.standard_normal((5, 1))
    qc = rng.uniform(0, 1, (3, 2))
    fwd = (mdl.ufo_forward_ablated if model == "ufo_ablated" else mdl.ufo_forward)

    def forward():
        return ad.reduce_sum(ad.square(fwd(params, ic, iv, qc)))

    return ad.grad_check(forward, dict(params.named_tensors()), h=1e-5)


def cmd_gradcheck(ns) -> int:
    models = [ns.model] if ns.model else list(tr.MODEL_KINDS)
    worst = 0.0
    for model in models:
        err = _gradcheck_once(model)
        status = "PASS" if err < ns.threshold else "FAIL"
        print(f"gradcheck {model}: max rel. error {err:.3e} "
              f"(threshold {ns.threshold:g}) {status}")
        worst = max(worst, err)
    return EXIT_OK if worst < ns.threshold else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# parser

def build_parser() -> _Parser:
    parser = _Parser(prog="ufo", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--output-root", default=None,
                        help="prefix for relative output paths "
                             "(default: $UFO_OUTPUT_ROOT or .)")
    parser.add_argument("--config", default=None,
                        help="optional key=value file; flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a benchmark dataset")
    p.add_argument("benchmark", choices=sorted(bm.BENCHMARK_IDS))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--param-range", "--lambda-range", "--s-range",
                   "--delta-range", dest="param_range", nargs=2, type=float,
                   default=None)
    p.add_argument("--ells", default=None, help="comma-separated, grf only")
    p.add_argument("--k", type=float, default=None, help="wavenumber, grf only")
    p.add_argument("--grf-mode", choices=("train", "eval"), default=None)
    p.add_argument("--input-mode", choices=("nonuniform", "regular"),
                   default=None, help="delta_helmholtz input sampling")
    p.add_argument("--split", choices=("train", "test"), default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=tr.MODEL_KINDS, default="ufo")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    for flag, typ in (("--epochs", int), ("--batch-size", int), ("--lr", float),
                      ("--lr-min", float), ("--query-subsample", int)):
        p.add_argument(flag, type=typ, default=None)
    p.add_argument("--lr-schedule", choices=("cosine", "constant"), default=None)
    p.add_argument("--activation", choices=("gelu", "tanh"), default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train full and ablated variants on "
                                      "identical data/seed/budget")
    p.add_argument("--train-data", required=True)
    p.add_argument("--eval-data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=42)
    for flag, typ in (("--epochs", int), ("--batch-size", int), ("--lr", float),
                      ("--query-subsample", int)):
        p.add_argument(flag, type=typ, default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("seeds", help="run the five-seed protocol")
    p.add_argument("--train-data", required=True)
    p.add_argument("--eval-data", required=True)
    p.add_argument("--model", choices=tr.MODEL_KINDS, default="ufo")
    p.add_argument("--out-dir", required=True)
    for flag, typ in (("--epochs", int), ("--batch-size", int), ("--lr", float),
                      ("--query-subsample", int)):
        p.add_argument(flag, type=typ, default=None)
    p.set_defaults(func=cmd_seeds)

    p = sub.add_parser("resolution", help="input/output resolution sweep "
                                          "(Burgers checkpoints)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("input", "output"), required=True)
    p.add_argument("--grids", required=True, help="comma-separated side lengths")
    p.add_argument("--lambda", dest="lam", type=float, default=5.8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_resolution)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check "
                                         "on toy model instances")
    p.add_argument("--model", choices=tr.MODEL_KINDS, default=None,
                   help="default: all three")
    p.add_argument("--threshold", type=float, default=GRADCHECK_THRESHOLD)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"ufo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        ns._file_config = _load_config_file(ns.config)
    except (_UsageError, OSError) as exc:
        print(f"ufo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return ns.func(ns)
    except _UsageError as exc:
        print(f"ufo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ValueError) as exc:
        print(f"ufo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, FactorizationError, GradCheckError,
            FloatingPointError) as exc:
        print(f"ufo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
