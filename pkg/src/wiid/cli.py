"""Command-line entry point: ``wiid {generate,train,eval,compare,experiment}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import evaluation as ev
from . import nfsc
from .config import dump_kv, read_kv
from .dataset import Domain, GenerationConfig, Split, generate_dataset, load_dataset, save_dataset
from .errors import WiidError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .nn import TrainConfig, load_checkpoint, save_checkpoint, spec_by_name, to_float32, train


def _gen_config(args) -> GenerationConfig:
    base = read_kv(args.config) if args.config else {}
    flags = {"classes": args.classes, "snr_min": args.snr_min, "snr_max": args.snr_max,
             "snr_step": args.snr_step, "per_cell": args.per_cell, "domain": args.domain,
             "n_cnn": args.n_cnn, "seed": args.seed}
    base.update({k: str(v) for k, v in flags.items() if v is not None})
    return GenerationConfig.from_text(dump_kv(base))


def cmd_generate(args) -> int:
    cfg = _gen_config(args)
    data = generate_dataset(cfg, Split[args.split.upper()], args.workers)
    save_dataset(data, args.out)
    print(f"wrote {len(data)} snapshots to {args.out}")
    return 0


def cmd_train(args) -> int:
    spec = spec_by_name(args.network)
    tr = load_dataset(args.train)
    va = load_dataset(args.val) if args.val else None
    lr = args.lr or (1e-4 if args.network == "original" else 1e-3)
    cfg = TrainConfig(lr=lr, epochs=args.epochs, batch=args.batch, seed=args.seed,
                      patience=args.patience if va is not None and args.patience else None)
    result = train(spec, tr.inputs, tr.labels, cfg,
                   va.inputs if va else None, va.labels if va else None)
    save_checkpoint(args.out, spec, to_float32(result.params))
    for m in result.history:
        val = "" if m.val_accuracy is None else f" val_acc={m.val_accuracy:.4f}"
        print(f"epoch {m.epoch} loss={m.train_loss:.4f} acc={m.train_accuracy:.4f}{val}")
    print(f"wrote checkpoint to {args.out}")
    return 0


def cmd_eval(args) -> int:
    data = load_dataset(args.data)
    if args.model:
        spec, params = load_checkpoint(args.model)
        report = ev.evaluate((spec, params), data)
    else:
        defs = (nfsc.defs_from_text(Path(args.nfsc_defs).read_text(encoding="utf-8"))
                if args.nfsc_defs else nfsc.default_class_defs())
        report = ev.evaluate(defs, data)
    Path(args.out).write_text(ev.report_csv(report), encoding="utf-8")
    if args.confusion:
        header = ["true"] + [f"pred{k}" for k in range(ev.N_CLASSES)] + ["no_class"]
        rows = [[i, *r] for i, r in enumerate(report.confusion)]
        Path(args.confusion).write_text(
            ",".join(header) + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows), encoding="utf-8")
    print(f"mean accuracy {report.mean_accuracy().mean():.4f}; wrote {args.out}")
    return 0


def cmd_compare(args) -> int:
    a, b = ev.report_from_csv(args.a), ev.report_from_csv(args.b)
    classes = ev.non_80211_classes() if args.classes == "no-80211" else None
    m = ev.compare(a, b, classes)
    print(f"mean_accuracy_gain_pct = {ev.fmt(m.mean_accuracy_gain)}")
    print(f"snr_gain_db = {ev.fmt(m.snr_gain_db)}")
    print(f"levels_used = {m.levels_used}")
    print(f"levels_skipped = {m.levels_skipped}")
    return 0


def cmd_experiment(args) -> int:
    base = read_kv(args.config) if args.config else {}
    for key in ("seed", "train_seed", "epochs", "train_per_cell", "val_per_cell", "workers", "network"):
        value = getattr(args, key)
        if value is not None:
            base[key] = str(value)
    cfg = ExperimentConfig.from_text(dump_kv(base))
    csv_path, meta_path = run_experiment(args.name, cfg, args.out)
    print(f"wrote {csv_path} and {meta_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wiid", description="Wireless interference identification toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a labelled snapshot dataset")
    g.add_argument("--config", help="key=value generation config; flags override it")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--split", choices=["train", "validation"], default="train")
    g.add_argument("--classes", help="'all' or comma-separated class indices")
    g.add_argument("--snr-min", type=float)
    g.add_argument("--snr-max", type=float)
    g.add_argument("--snr-step", type=float)
    g.add_argument("--per-cell", type=int)
    g.add_argument("--domain", choices=[d.name.lower() for d in Domain])
    g.add_argument("--n-cnn", type=int)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a CNN on a dataset file")
    t.add_argument("--train", required=True)
    t.add_argument("--val")
    t.add_argument("--network", choices=["reduced", "original"], default="reduced")
    t.add_argument("--lr", type=float, default=0.0, help="0 uses the network default")
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--batch", type=int, default=1024)
    t.add_argument("--patience", type=int, default=20, help="early-stop patience; 0 disables")
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="per-class accuracy of a checkpoint or the NFSC on a dataset")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="WIINN1 checkpoint")
    src.add_argument("--nfsc", action="store_true", help="use the fuzzy template classifier")
    e.add_argument("--nfsc-defs", help="key=value NFSC class definitions")
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--confusion", help="also write the confusion matrix CSV here")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="accuracy and SNR gain of report A over report B")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--classes", choices=["all", "no-80211"], default="all")
    c.set_defaults(func=cmd_compare)

    x = sub.add_parser("experiment", help="run one of the comparison experiments")
    x.add_argument("name", choices=EXPERIMENTS)
    x.add_argument("--config", help="key=value experiment config; flags override it")
    x.add_argument("--out", required=True, help="output directory")
    x.add_argument("--seed", type=int)
    x.add_argument("--train-seed", type=int)
    x.add_argument("--epochs", type=int)
    x.add_argument("--train-per-cell", type=int)
    x.add_argument("--val-per-cell", type=int)
    x.add_argument("--workers", type=int)
    x.add_argument("--network", choices=["reduced", "original"])
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (WiidError, OSError) as exc:
        print(f"wiid: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
