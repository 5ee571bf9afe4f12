"""Command-line front end: generate, train, evaluate, sweep, flops.

Exit codes: 0 success, 2 configuration error, 3 I/O error (including a
missing checkpoint), 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

import numpy as np

from kdml.config import RunConfig
from kdml.errors import ConfigError, InputError, NumericalError
from kdml.experiments import ALL_ESTIMATORS, sweep
from kdml.estimators import mse
from kdml.io import (
    Checkpoint,
    FormatError,
    atomic_write,
    cell_name,
    read_checkpoint,
    read_dataset,
    write_checkpoint,
    write_dataset,
    write_loss_curve,
    write_results,
)
from kdml.learn import FlopsModel, flops
from kdml.pipeline import (
    KNOWLEDGE_ONLY,
    VARIANTS,
    ExperimentResult,
    evaluate_learner,
    generate_cell,
    knowledge_result,
    run_kdml,
    to_complex,
)
from kdml.plotting import plot_mse_vs_snr
from kdml.profiling import loglog_slope, time_lstm, time_ls, time_mmse

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("kdml")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--seed", type=int, help="single master seed (overrides the config's seeds)")
    common.add_argument("--scale", type=float, help="train/test counts as a fraction of 27,000/3,000")
    common.add_argument("--snr", type=_float_list, help="comma-separated SNR list in dB")
    common.add_argument("--nps", type=_int_list, help="comma-separated pilot spacings")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kdml", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="simulate frames and write dataset files")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", parents=[common], help="train one learner per dataset cell")
    p.add_argument("--variant", required=True, choices=sorted(VARIANTS))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="score estimators and write results.csv")
    p.add_argument("--variant", action="append", choices=list(ALL_ESTIMATORS),
                   help="estimator to score (repeatable); default: ls and mmse")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common], help="generate, train and evaluate in one process")
    p.add_argument("--variant", action="append", choices=list(ALL_ESTIMATORS),
                   help="estimator to include (repeatable); default: all")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("flops", parents=[common], help="closed-form FLOPs and measured timings")
    p.add_argument("--n", type=int, default=1, help="data length for the closed-form count")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_flops)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.scale is not None:
        cfg = cfg.scaled(args.scale)
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.snr:
        overrides["snr_list"] = args.snr
    if args.nps:
        overrides["nps_list"] = args.nps
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _cells(cfg: RunConfig):
    for seed in cfg.seeds:
        for nps in cfg.nps_list:
            for snr in cfg.snr_list:
                yield snr, nps, seed


def _meta(cfg: RunConfig, **extra) -> dict:
    return {"config_hash": cfg.config_hash(), "seeds": ",".join(map(str, cfg.seeds)), **extra}


def _dataset_path(cfg: RunConfig, snr, nps, seed) -> Path:
    return Path(cfg.out_dir) / "datasets" / f"{cell_name(snr, nps, seed)}.kdd"


def _checkpoint_path(cfg: RunConfig, variant: str, snr, nps, seed) -> Path:
    return Path(cfg.out_dir) / "checkpoints" / f"{variant}_{cell_name(snr, nps, seed)}.ckpt"


# -- subcommands --------------------------------------------------------------


def cmd_generate(cfg: RunConfig, args) -> int:
    for snr, nps, seed in _cells(cfg):
        cell = generate_cell(cfg, snr, nps, seed)
        path = _dataset_path(cfg, snr, nps, seed)
        write_dataset(path, cell, cfg)
        print(f"{path}: {len(cell.train['ls'])} train / {len(cell.test['ls'])} test windows")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    for snr, nps, seed in _cells(cfg):
        cell, _ = read_dataset(_dataset_path(cfg, snr, nps, seed))
        ckpt_path = _checkpoint_path(cfg, args.variant, snr, nps, seed)
        try:
            outcome = run_kdml(args.variant, cell, cfg)
        except NumericalError:
            ckpt_path.unlink(missing_ok=True)
            raise
        write_checkpoint(
            ckpt_path,
            Checkpoint(outcome.training.params, cfg.n_steps, cfg.horizon, outcome.normalizer,
                       seed=seed, config_hash=cfg.config_hash()),
        )
        loss_path = Path(cfg.out_dir) / "losses" / f"{args.variant}_{cell_name(snr, nps, seed)}.csv"
        write_loss_curve(loss_path, outcome.training.losses,
                         _meta(cfg, variant=args.variant, cell=cell_name(snr, nps, seed)))
        r = outcome.result
        print(f"{ckpt_path}: {r.estimator} final loss {outcome.training.losses[-1] if outcome.training.losses else float('nan'):.4e}, test mse {r.mse:.4e}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, args) -> int:
    estimators = args.variant or ["ls", "mmse"]
    learners = [e for e in estimators if e in VARIANTS]
    missing = [
        str(_checkpoint_path(cfg, v, snr, nps, seed))
        for v in learners
        for snr, nps, seed in _cells(cfg)
        if not _checkpoint_path(cfg, v, snr, nps, seed).exists()
    ]
    if missing:
        raise FileNotFoundError("missing checkpoints for cells:\n  " + "\n  ".join(missing))

    rows: list[ExperimentResult] = []
    for snr, nps, seed in _cells(cfg):
        cell, _ = read_dataset(_dataset_path(cfg, snr, nps, seed))
        for name in estimators:
            if name in KNOWLEDGE_ONLY:
                rows.append(knowledge_result(name, cell))
                continue
            ckpt = read_checkpoint(_checkpoint_path(cfg, name, snr, nps, seed))
            variant = VARIANTS[name]
            started = time.perf_counter()
            refined = evaluate_learner(ckpt.params, ckpt.normalizer, cell.test[variant.knowledge.value])
            rows.append(ExperimentResult(
                snr_db=cell.snr_db, nps=cell.nps, estimator=variant.label,
                mse=mse(to_complex(refined), to_complex(cell.truth)), seed=seed,
                wall_ms=(time.perf_counter() - started) * 1e3,
            ))
    _write_outputs(cfg, rows, plot=not args.no_plot)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    estimators = tuple(args.variant) if args.variant else ALL_ESTIMATORS
    plan = [(snr, nps, estimators) for nps in cfg.nps_list for snr in cfg.snr_list]
    rows = sweep(cfg, plan, progress=print)
    _write_outputs(cfg, rows, plot=not args.no_plot)
    return EXIT_OK


def _write_outputs(cfg: RunConfig, rows, plot: bool) -> None:
    out = Path(cfg.out_dir)
    write_results(out / "results.csv", rows, _meta(cfg))
    print(f"wrote {out / 'results.csv'} ({len(rows)} rows)")
    if plot:
        for nps in sorted({r.nps for r in rows}):
            path = out / f"mse_vs_snr_nps{nps}.svg"
            plot_mse_vs_snr(rows, path, nps=nps)
            print(f"wrote {path}")
        if len({r.nps for r in rows}) > 1:
            plot_mse_vs_snr(rows, out / "mse_vs_snr_all_nps.svg")


def cmd_flops(cfg: RunConfig, args) -> int:
    i, m, l = 2, cfg.hidden, 2 * cfg.horizon  # noqa: E741
    total = flops(FlopsModel(n=args.n, i=i, m=m, l=l))
    print(f"closed-form LSTM FLOPs (n={args.n}, i={i}, m={m}, l={l}): {total}")
    print(f"  per sample: {flops(FlopsModel(n=1, i=i, m=m, l=l))}")

    rng = np.random.default_rng(cfg.seeds[0])
    ofdm = cfg.ofdm(cfg.nps_list[0])
    lines = ["kind,size,seconds"]

    sizes = (16, 32, 64, 128)
    ls_t = [time_ls(s, ofdm, rng, args.repeats) for s in sizes]
    lines += [f"ls,{s * ofdm.fft_size},{t:.6g}" for s, t in zip(sizes, ls_t)]
    print(f"LS over n estimates: slope {loglog_slope([s * ofdm.fft_size for s in sizes], ls_t):.2f} (expect ~1)")

    pilots = (128, 256, 512, 1024)
    mm_t = [time_mmse(p, cfg.mmse_window, rng, args.repeats) for p in pilots]
    lines += [f"mmse,{p},{t:.6g}" for p, t in zip(pilots, mm_t)]
    print(f"MMSE over n pilots: slope {loglog_slope(pilots, mm_t):.2f} (cubic solve; superlinear)")

    ns = (256, 512, 1024, 2048)
    lstm_n = [time_lstm(n, m, rng, cfg.n_steps, args.repeats) for n in ns]
    lines += [f"lstm_n,{n},{t:.6g}" for n, t in zip(ns, lstm_n)]
    print(f"LSTM inference over n windows (m={m}): slope {loglog_slope(ns, lstm_n):.2f} (expect ~1)")

    ms = (32, 64, 128, 256)
    lstm_m = [time_lstm(1024, h, rng, cfg.n_steps, args.repeats) for h in ms]
    lines += [f"lstm_m,{h},{t:.6g}" for h, t in zip(ms, lstm_m)]
    print(f"LSTM inference vs hidden size m: slope {loglog_slope(ms, lstm_m):.2f} (closed form: 2)")

    out = Path(cfg.out_dir)
    header = "".join(f"# {k}={v}\n" for k, v in _meta(cfg, flops=total).items())
    atomic_write(out / "flops.csv", (header + "\n".join(lines) + "\n").encode())
    print(f"wrote {out / 'flops.csv'}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return args.func(cfg, args)
    except (ConfigError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
