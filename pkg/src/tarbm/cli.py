"""Command line entry point.

Subcommands: train, predict, generate, viz, bench, inspect. Every
subcommand is deterministic given (config, seed, inputs). Exit codes:
0 ok, 1 runtime failure, 2 usage or validation error.

Dataset arguments accept a delimited text file, a .tseq binary cache,
a directory of frame_*.pgm files (patch extraction plus preprocessing
is applied per config), or "synth:KIND" for the built-in generators.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import crbm_model, data, model_io, pgm, rbm, tarbm_model, viz
from .config import RunConfig, load_config
from .errors import DomainError, ParseError, ShapeError, TarbmError
from .tensor_core import Rng

USAGE_ERROR, RUNTIME_ERROR = 2, 1


def _log(msg: str):
    print(msg, file=sys.stderr)


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.set or []:
        if "=" not in item:
            raise DomainError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        cfg.set(key.strip(), value.strip())
    return cfg


def _resolve_seed(args, cfg: RunConfig) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in cfg.explicit:
        return cfg.seed
    env = os.environ.get("TARBM_SEED")
    if env is not None:
        return int(env)
    return cfg.seed


def load_dataset(path: str, cfg: RunConfig, seed: int) -> data.SequenceDataset:
    if path.startswith("synth:"):
        kind = path.split(":", 1)[1]
        rng = Rng(seed).spawn(0xDA7A)
        if kind == "cyclic_shift":
            return data.make_cyclic_shift(cfg.synth_dims, cfg.synth_frames,
                                          cfg.synth_sequences, rng)
        if kind == "sinusoid_mixture":
            return data.make_sinusoid_mixture(cfg.synth_dims, cfg.synth_frames,
                                              cfg.synth_modes, rng,
                                              cfg.synth_sequences)
        if kind == "translating_bar":
            return data.make_translating_bar(cfg.patch_edge, cfg.synth_frames,
                                             cfg.synth_sequences, rng)
        if kind == "bouncing_ball":
            return data.make_bouncing_ball(cfg.synth_frames, rng,
                                           n_sequences=cfg.synth_sequences)
        raise DomainError(f"unknown synthetic dataset kind {kind!r}")
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset not found: {path}")
    if os.path.isdir(path):
        movie = pgm.read_movie(path)
        rng = Rng(seed).spawn(0xDA7A)
        ds = data.extract_patch_sequences(movie, cfg.patch_spec(), rng)
        if cfg.contrast_normalize:
            ds = data.contrast_normalize(ds)
        if cfg.whiten:
            tf = data.fit_zca(ds, cfg.whiten_epsilon, cfg.whiten_relative)
            ds = data.apply_zca(tf, ds)
        return ds
    if path.endswith(".tseq"):
        return data.load_cache(path)
    return data.load_delimited(path, cfg.delimiter)


def _build_and_train(kind: str, ds: data.SequenceDataset, cfg: RunConfig,
                     seed: int):
    rng = Rng(seed)
    v = ds.n_dims
    cd = cfg.cd_config()
    sched = cfg.schedule()
    stages = {"static_done": False, "ae_done": False, "joint_done": False}
    if kind == "rbm":
        params = rbm.init_rbm(v, cfg.hidden_units, rng, cfg.init_stddev,
                              cfg.visible_kind)
    elif kind in ("trbm", "tarbm"):
        params = tarbm_model.init_tarbm(v, cfg.hidden_units, cfg.delay, rng,
                                        cfg.init_stddev, cfg.visible_kind)
    elif kind == "crbm":
        params = crbm_model.init_crbm(v, cfg.hidden_units, cfg.delay, rng,
                                      cfg.init_stddev, cfg.visible_kind)
    else:
        raise DomainError(f"unknown model kind {kind!r}")

    interrupted = False
    try:
        if kind == "rbm":
            rbm.train_static(params, ds.frames, cd, cfg.static_epochs,
                             cfg.minibatch_size, rng, log=_log)
            stages["static_done"] = cfg.static_epochs > 0
        elif kind in ("trbm", "tarbm"):
            rbm.train_static(params.static, ds.frames, cd, sched.static_epochs,
                             sched.minibatch_size, rng, log=_log)
            stages["static_done"] = sched.static_epochs > 0
            if kind == "tarbm":
                tarbm_model.ae_pretrain_delays(params, ds, sched, rng, log=_log)
                stages["ae_done"] = (cfg.delay > 0
                                     and sched.ae_epochs_per_delay > 0)
            tarbm_model.joint_cd_finetune(params, ds, sched, cd, rng, log=_log)
            stages["joint_done"] = sched.joint_epochs > 0
        else:
            crbm_model.cd_train(params, ds, cd,
                                sched.static_epochs + sched.joint_epochs,
                                sched.minibatch_size, rng, log=_log)
            stages["joint_done"] = True
    except KeyboardInterrupt:
        interrupted = True
    return params, stages, interrupted


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args, cfg)
    ds = load_dataset(args.data, cfg, seed)
    params, stages, interrupted = _build_and_train(args.kind, ds, cfg, seed)
    out = args.out + ".partial" if interrupted else args.out
    mf = model_io.ModelFile(args.kind, params, seed, cfg.hash(), stages)
    model_io.save_model(mf, out)
    _log(("interrupted; partial model written to " if interrupted else "wrote ")
         + out)
    return RUNTIME_ERROR if interrupted else 0


def _infer_patch_edge(n_visible: int, explicit: int | None) -> int:
    if explicit:
        return explicit
    edge = math.isqrt(n_visible)
    if edge * edge != n_visible:
        raise DomainError(
            f"V={n_visible} is not a perfect square; pass --patch-edge")
    return edge


def _history_and_order(mf: model_io.ModelFile):
    if mf.kind in ("trbm", "tarbm"):
        return mf.params.order, lambda h: tarbm_model.predict_next(mf.params, h)
    if mf.kind == "crbm":
        return mf.params.order, lambda h: crbm_model.predict_next(mf.params, h)
    raise DomainError(f"{mf.kind} models do not support temporal prediction")


def cmd_predict(args) -> int:
    cfg = _resolve_config(args)
    mf = model_io.load_model(args.model)
    ds = load_dataset(args.data, cfg, _resolve_seed(args, cfg))
    order, predict = _history_and_order(mf)
    windows = data.window_tensor(ds, order)
    if windows.shape[0] == 0:
        raise DomainError(f"dataset has no windows of width {order + 1}")
    preds = np.stack([predict(w[1:]) for w in windows])
    targets = windows[:, 0]
    mse = float(np.mean((preds - targets) ** 2))
    data.save_delimited(data.SequenceDataset(preds), args.out, cfg.delimiter)
    print(f"windows {windows.shape[0]}  mse {mse:.6f}")
    return 0


def cmd_generate(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args, cfg)
    mf = model_io.load_model(args.model)
    if mf.kind not in ("trbm", "tarbm"):
        raise DomainError("generate requires a trbm or tarbm model")
    order = mf.params.order
    v = mf.static.n_visible
    if args.data:
        ds = load_dataset(args.data, cfg, seed)
        if ds.n_frames < order:
            raise DomainError(f"need at least {order} frames of seed history")
        history = ds.frames[::-1][:order]
    else:
        history = np.zeros((order, v))
    rolled = tarbm_model.generate(mf.params, history, args.frames,
                                  Rng(seed), sample_hidden=args.sample)
    data.save_delimited(data.SequenceDataset(rolled), args.out, cfg.delimiter)
    return 0


def cmd_viz(args) -> int:
    cfg = _resolve_config(args)
    mf = model_io.load_model(args.model)
    edge = _infer_patch_edge(mf.static.n_visible, args.patch_edge)
    os.makedirs(args.out_dir, exist_ok=True)
    ext = args.format
    if args.mode == "grid":
        img = viz.filter_grid(mf.static.w, edge,
                              global_normalize=cfg.global_normalize)
        out = os.path.join(args.out_dir, f"filters.{ext}")
        viz.write_image(out, img)
        _log(f"wrote {out}")
        return 0
    if args.mode == "temporal":
        if mf.kind != "crbm":
            raise DomainError(
                "temporal weight rows apply to crbm models; use --mode trace "
                "for trbm/tarbm")
        ranked = viz.temporal_variation_rank(mf.params, edge)
        for unit in ranked[:cfg.viz_units]:
            img = viz.crbm_temporal_grid(mf.params, unit, edge,
                                         cfg.global_normalize)
            viz.write_image(os.path.join(args.out_dir,
                                         f"unit_{unit:04d}.{ext}"), img)
        _log(f"wrote {min(cfg.viz_units, len(ranked))} unit rows to {args.out_dir}")
        return 0
    if args.mode == "trace":
        if mf.kind not in ("trbm", "tarbm"):
            raise DomainError(
                "forward-projection traces apply to trbm/tarbm models; use "
                "--mode temporal for crbm")
        n = args.n if args.n else cfg.fan_out
        ranked = viz.temporal_variation_rank(mf.params, edge)
        layout = "n1_column" if n == 1 else "tree_rows"
        for unit in ranked[:cfg.viz_units]:
            trace = viz.forward_projection(mf.params, unit, n)
            img = viz.render_trace(trace, mf.params, edge, layout,
                                   cfg.global_normalize)
            stem = os.path.join(args.out_dir, f"trace_{unit:04d}")
            viz.write_image(f"{stem}.{ext}", img)
            viz.save_trace_sidecar(trace, f"{stem}.json")
        _log(f"wrote {min(cfg.viz_units, len(ranked))} traces to {args.out_dir}")
        return 0
    raise DomainError(f"unknown viz mode {args.mode!r}")


def cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args, cfg)
    ds = load_dataset(args.data, cfg, seed)
    kinds = [k.strip() for k in (args.models or cfg.bench_models).split(",")
             if k.strip()]
    seeds = list(range(seed, seed + cfg.bench_seeds))
    report = bench_mod.run_prediction_bench(ds, cfg.protocol(), kinds,
                                            cfg.schedule(), cfg.cd_config(),
                                            seeds, cfg.hash(), log=_log)
    blob = bench_mod.emit_report(report, args.format)
    if args.out and args.out != "-":
        with open(args.out, "wb") as fh:
            fh.write(blob)
    else:
        sys.stdout.buffer.write(blob)
    return 0


def cmd_inspect(args) -> int:
    mf = model_io.load_model(args.model)
    static = mf.static
    order = 0 if mf.kind == "rbm" else mf.params.order
    print(f"kind: {mf.kind}")
    print(f"visible: {static.n_visible} ({static.visible_kind})")
    print(f"hidden: {static.n_hidden}")
    print(f"delay: {order}")
    print(f"seed: {mf.seed}")
    print(f"config_hash: {mf.config_hash or '(none)'}")
    for name, done in mf.stages.items():
        print(f"{name}: {str(done).lower()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tarbm",
        description="Temporal RBMs: train, predict, generate, visualize, benchmark.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--seed", type=int,
                        help="seed override (falls back to config, then TARBM_SEED)")

    sp = sub.add_parser("train", help="train a model end to end")
    common(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--kind", required=True, choices=model_io.KINDS)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="next-frame predictions over a dataset")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("generate", help="autoregressive rollout")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--frames", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--data", help="dataset supplying the seed history")
    sp.add_argument("--sample", action="store_true",
                    help="sample hidden states instead of mean-field rollout")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("viz", help="receptive-field images")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--mode", required=True, choices=("grid", "temporal", "trace"))
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--n", type=int, help="trace fan-out (default: config fan_out)")
    sp.add_argument("--patch-edge", type=int)
    sp.add_argument("--format", default="pgm", choices=("pgm", "png"))
    sp.set_defaults(func=cmd_viz)

    sp = sub.add_parser("bench", help="next-frame prediction benchmark")
    common(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--models", help="comma-separated kinds (default: config)")
    sp.add_argument("--out", default="-")
    sp.add_argument("--format", default="text_table",
                    choices=("text_table", "json"))
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("inspect", help="print a model file header")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        _log(str(exc))
        return USAGE_ERROR
    except (DomainError, ShapeError, ParseError) as exc:
        _log(f"error: {exc}")
        return USAGE_ERROR
    except TarbmError as exc:
        _log(f"error: {exc}")
        return RUNTIME_ERROR
    except KeyboardInterrupt:
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
