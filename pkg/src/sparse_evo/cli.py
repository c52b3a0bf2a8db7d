"""Command-line frontend: train, evaluate, analyze, gen-data."""

import argparse
import glob as globmod
import json
import os
import sys
from dataclasses import asdict

from . import analysis, data
from .config import POLICY_NAMES, resolve_run_config
from .network import TrainingDivergenceError, build_model
from .train import evaluate, load_model, train_model


def _resolve_dataset(cfg):
    if cfg.data is None:
        raise ValueError("no dataset: pass --data <csv> or --data madelon-like")
    if cfg.data == "madelon-like":
        return data.gen_madelon_like(cfg.data_samples, cfg.data_seed)
    return data.load_csv(cfg.data, label_column=cfg.label_column,
                         normalize=cfg.normalize)


def cmd_train(args):
    overrides = {
        "policy": args.policy, "seed": args.seed, "out": args.out,
        "data": args.data, "epochs": args.epochs, "eta": args.eta,
        "zeta": args.zeta, "epsilon": args.epsilon,
        "dropout_rate": args.dropout_rate, "batch_size": args.batch_size,
        "test_fraction": args.test_fraction, "data_seed": args.data_seed,
        "data_samples": args.data_samples,
        "checkpoint_epochs": args.checkpoint_epochs,
    }
    cfg = resolve_run_config(preset=args.preset, config_file=args.config,
                             overrides=overrides)
    dataset = _resolve_dataset(cfg)
    train_ds, test_ds = data.split(dataset, cfg.test_fraction, cfg.seed)

    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "run_config.json"), "w") as fh:
        json.dump(asdict(cfg), fh, indent=2)

    model = build_model(cfg.train_config(), dataset.n_features,
                        dataset.n_classes, policy=cfg.policy)
    try:
        train_model(model, train_ds, test_ds, out_dir=cfg.out,
                    checkpoint_epochs=cfg.checkpoint_epochs, verbose=not args.quiet)
    except TrainingDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(cfg.out)
    return 0


def cmd_evaluate(args):
    model = load_model(args.model)
    dataset = data.load_csv(args.data, label_column=args.label_column,
                            normalize=args.normalize)
    if dataset.n_features != model.n_inputs:
        print(f"error: dataset width {dataset.n_features} does not match "
              f"model input width {model.n_inputs}", file=sys.stderr)
        return 2
    print(f"{evaluate(model, dataset):.4f}")
    return 0


def _load_roles(csv_path):
    meta_path = str(csv_path) + ".meta.json"
    if not os.path.exists(meta_path):
        return None
    with open(meta_path) as fh:
        meta = json.load(fh)
    return meta.get("feature_roles")


def cmd_analyze(args):
    dataset = data.load_csv(args.data, label_column=args.label_column,
                            normalize=args.normalize)
    os.makedirs(args.out, exist_ok=True)

    if args.mode == "degrees":
        model = load_model(args.model)
        profile = analysis.input_degrees(model, exclude_final_epoch=True)
        roles_by_name = _load_roles(args.data)
        roles = None
        if roles_by_name:
            roles = [roles_by_name.get(name, "") for name in dataset.feature_names]
        analysis.write_degrees_csv(profile, os.path.join(args.out, "degrees.csv"),
                                   roles=roles)
        edges, counts = analysis.degree_histogram(profile, args.bins)
        analysis.write_histogram_csv(edges, counts,
                                     os.path.join(args.out, "histogram.csv"))
    elif args.mode == "ablation":
        model = load_model(args.model)
        curve = analysis.ablation_curve(model, dataset, order=args.order,
                                        step=args.step)
        suffix = "asc" if args.order == "ascending" else "desc"
        analysis.write_ablation_csv(
            curve, os.path.join(args.out, f"ablation_{suffix}.csv"))
    elif args.mode == "snapshots":
        paths = sorted(globmod.glob(args.model))
        if not paths:
            print(f"error: no checkpoints match {args.model!r}", file=sys.stderr)
            return 2
        checkpoints = [load_model(p) for p in paths]
        checkpoints.sort(key=lambda m: m.epoch)
        curves = analysis.snapshot_curves(checkpoints, dataset, step=args.step)
        for model, curve in zip(checkpoints, curves):
            analysis.write_ablation_csv(
                curve, os.path.join(args.out, f"ablation_epoch{model.epoch}.csv"))
    return 0


def cmd_gen_data(args):
    if args.preset != "madelon-like":
        print(f"error: unknown preset {args.preset!r}", file=sys.stderr)
        return 2
    dataset = data.gen_madelon_like(args.samples, args.seed)
    data.save_csv(dataset, args.out)
    print(args.out)
    return 0


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparse-evo",
        description="Train and analyze sparse MLPs with evolving topology.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and log per-epoch metrics")
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--preset", choices=["default", "madelon"])
    p.add_argument("--policy", choices=POLICY_NAMES)
    p.add_argument("--data", help="dataset CSV path, or 'madelon-like'")
    p.add_argument("--out", help="output run directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--dropout-rate", dest="dropout_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--checkpoint-epochs", dest="checkpoint_epochs", type=_int_list,
                   help="comma-separated epochs at which to save checkpoints")
    p.add_argument("--data-samples", dest="data_samples", type=int)
    p.add_argument("--data-seed", dest="data_seed", type=int)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="print test accuracy of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", dest="label_column", default="label")
    p.add_argument("--normalize", default="zscore",
                   choices=["zscore", "minmax", "none"])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="degree/ablation/snapshot analysis CSVs")
    p.add_argument("--mode", required=True,
                   choices=["degrees", "ablation", "snapshots"])
    p.add_argument("--model", required=True,
                   help="model path (degrees/ablation) or glob (snapshots)")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", default="ascending",
                   choices=["ascending", "descending"])
    p.add_argument("--step", type=int, default=20)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--label-column", dest="label_column", default="label")
    p.add_argument("--normalize", default="zscore",
                   choices=["zscore", "minmax", "none"])
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset CSV")
    p.add_argument("--preset", required=True)
    p.add_argument("--samples", type=int, default=2600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, data.ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
