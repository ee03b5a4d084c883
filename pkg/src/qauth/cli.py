"""``qauth`` command-line entry point.

Exit status is 0 on success, 2 for configuration errors and 3 for I/O errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import classifier as clf
from . import experiments as ex
from .config import PRESETS, ConfigError, RunConfig, load_config, preset, us_to_s
from .protocol import mu_lower_bound

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _floats(text: str, conv=float) -> tuple[float, ...]:
    try:
        return tuple(conv(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--preset", help="start from a named preset: " + ", ".join(sorted(PRESETS)))
    common.add_argument("--seed", type=int)
    common.add_argument("--lambda", dest="lam", type=int)
    common.add_argument("--distance-km", help="comma-separated list")
    common.add_argument("--wait-us", help="comma-separated list, microseconds")
    common.add_argument("--replicates", type=int)
    common.add_argument("--scheme", choices=["user_server", "symmetric", "asymmetric"])
    common.add_argument("--attacker", action="store_true", default=None)
    common.add_argument("--out", type=Path)

    parser = _Parser(prog="qauth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="r01 per replicate and per point")
    sub.add_parser("sweep", parents=[common],
                   help="simulate over the distance/wait grid and write plot data")
    sub.add_parser("train-classifier", parents=[common],
                   help="train the transcript classifier; writes weights, curves and ROC")
    sub.add_parser("compare-methods", parents=[common],
                   help="static threshold against the classifier on held-out data")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = preset(args.preset) if args.preset else RunConfig()
    if args.config is not None:
        try:
            cfg = load_config(args.config, cfg)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from exc
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.lam is not None:
        changes["lam"] = args.lam
    if args.distance_km is not None:
        changes["distances"] = _floats(args.distance_km)
    if args.wait_us is not None:
        changes["wait_times"] = _floats(args.wait_us, us_to_s)
    if args.replicates is not None:
        changes["replicates"] = args.replicates
    if args.scheme is not None:
        changes["scheme"] = args.scheme
    if args.attacker:
        changes["attacker"] = True
    if args.out is not None:
        changes["out"] = str(args.out)
    return cfg.replace(**changes) if changes else cfg


def _write(path: Path, text: str) -> None:
    path.write_text(text)


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}_{suffix}.csv")


def cmd_simulate(cfg: RunConfig) -> list[Path]:
    out = Path(cfg.out)
    _write(out, ex.rows_to_csv(ex.simulate(cfg)))
    return [out]


def cmd_sweep(cfg: RunConfig) -> list[Path]:
    out = Path(cfg.out)
    rows = ex.simulate(cfg)
    _write(out, ex.rows_to_csv(rows))
    written = [out]
    for name, text in ex.figure_series(rows).items():
        path = _sibling(out, name)
        _write(path, text)
        written.append(path)
    return written


def _check_blocks(cfg: RunConfig) -> None:
    if cfg.lam % clf.BLOCK:
        raise ConfigError(f"lambda must be a multiple of {clf.BLOCK} for the classifier")


def cmd_train_classifier(cfg: RunConfig) -> list[Path]:
    _check_blocks(cfg)
    result, _ = ex.train_classifier(cfg)
    out = Path(cfg.out)
    weights = out.with_suffix(".weights")
    curve = _sibling(out, "learning_curve")
    roc = _sibling(out, "roc")
    _write(weights, clf.dumps_weights(result.model))
    _write(curve, ex.write_csv(
        ["epoch", "train_cross_entropy", "train_accuracy", "val_cross_entropy", "val_accuracy"],
        ([k + 1, t.cross_entropy, t.accuracy, v.cross_entropy, v.accuracy]
         for k, (t, v) in enumerate(zip(result.train_curve, result.val_curve)))))
    final = result.val_curve[-1]
    _write(roc, ex.write_csv(["false_positive_rate", "true_positive_rate"],
                             final.roc_points.tolist()))
    _write(out, ex.write_csv(
        ["lambda", "distance_km", "wait_time_us", "seed", "val_accuracy", "val_cross_entropy", "auc"],
        [[cfg.lam, cfg.distances[0], ex.micro(cfg.wait_times[0]), cfg.seed,
          final.accuracy, final.cross_entropy, final.auc]]))
    return [out, weights, curve, roc]


def cmd_compare_methods(cfg: RunConfig) -> list[Path]:
    _check_blocks(cfg)
    cmp = ex.compare_methods(cfg)
    out = Path(cfg.out)
    point = [cfg.lam, cfg.distances[0], ex.micro(cfg.wait_times[0]), cfg.seed]
    _write(out, ex.write_csv(
        ["method", "lambda", "distance_km", "wait_time_us", "seed", "mu", "accuracy", "note"],
        [["static", *point, cmp.static_mu, cmp.static_accuracy,
          "vacuous_bound" if cmp.static_vacuous else ""],
         ["dnn", *point, "", cmp.dnn_accuracy, ""]]))
    sweep = _sibling(out, "static_sweep")
    lower = mu_lower_bound(cfg.lam)
    _write(sweep, ex.write_csv(["mu", "accuracy", "vacuous_bound"],
                               ([mu, acc, int(mu <= lower)] for mu, acc in cmp.static_sweep)))
    return [out, sweep]


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "train-classifier": cmd_train_classifier,
    "compare-methods": cmd_compare_methods,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        written = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"qauth: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"qauth: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
