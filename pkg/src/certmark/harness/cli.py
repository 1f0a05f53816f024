"""Command-line entry point: ``certmark <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .. import __version__
from ..attacks import (
    adaptive_whitebox_attack,
    blackbox_attack,
    compression_init,
    quality_compress,
    whitebox_attack,
)
from ..basewm import ReferenceDecoder, embed
from ..core import ImageTensor, as_array
from ..errors import CertmarkError, InitNotAdversarial
from ..imageio import list_images, load_image, save_image
from ..smoothing import image_id_of
from .config import METHODS, load_config
from .evaluate import (
    ATTACKS,
    DecoderSource,
    attack_target,
    NamedImage,
    certify_images,
    eval_certified,
    eval_empirical,
    forgery_seed_image,
    load_dataset,
    make_oracle,
)
from .metrics import ssim
from .report import emit_results, format_csv, format_for_path, format_json
from .synthetic import write_corpus

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="experiment config file (key = value lines)")
    p.add_argument("--seed", type=int, help="master seed for all noise streams")
    p.add_argument("--threads", type=int, help="worker threads (per-image parallelism)")
    p.add_argument("--out", help="output file or directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="certmark", description="Certified robustness of image watermark detection.")
    parser.add_argument("--version", action="version", version=f"certmark {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen-synthetic", parents=[common], help="write a seeded synthetic corpus")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--channels", type=int, choices=(1, 3), default=1)
    p.add_argument("--format", choices=("netpbm", "raw"), default="netpbm")

    p = sub.add_parser("embed", parents=[common], help="watermark every image of a directory")
    p.add_argument("--input", required=True, help="directory of cover images")
    p.add_argument("--strength", type=float)

    p = sub.add_parser("detect", parents=[common], help="detect the watermark in one image")
    p.add_argument("image")
    p.add_argument("--smoothed", action="store_true", help="use the smoothed decoder")
    p.add_argument("--method", choices=METHODS)

    p = sub.add_parser("certify", parents=[common], help="per-image certified BA intervals")
    p.add_argument("images", nargs="*", help="image files (default: config watermarked_dir)")
    p.add_argument("--input", help="directory of images")
    p.add_argument("--method", choices=METHODS + ("all",))

    p = sub.add_parser("eval-certified", parents=[common], help="CFNR/CFPR over a corpus")
    p.add_argument("--watermarked")
    p.add_argument("--nonwatermarked")
    p.add_argument("--method", choices=METHODS + ("all",))
    p.add_argument("--format", choices=("csv", "json"))

    p = sub.add_parser("eval-empirical", parents=[common], help="FNR/FPR under an attack")
    p.add_argument("--input", help="image directory (default from config and goal)")
    p.add_argument("--attack", choices=ATTACKS)
    p.add_argument("--goal", choices=("removal", "forgery"))
    p.add_argument("--target", choices=("base", "smoothed"))
    p.add_argument("--format", choices=("csv", "json"))

    p = sub.add_parser("attack", parents=[common], help="attack one image and report")
    p.add_argument("image")
    p.add_argument("--attack", choices=ATTACKS[1:], default="whitebox")
    p.add_argument("--goal", choices=("removal", "forgery"))
    p.add_argument("--target", choices=("base", "smoothed"))
    p.add_argument("--R", type=float, default=0.5, help="l2 budget")
    p.add_argument("--save", help="write the attacked image here")
    return parser


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _config(args, **extra):
    methods = getattr(args, "method", None)
    if methods == "all":
        methods = METHODS
    elif methods is not None:
        methods = (methods,)
    return load_config(args.config, master_seed=args.seed, threads=args.threads, methods=methods, **extra)


def _write_text(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_gen_synthetic(args):
    if not args.out:
        raise UsageError("gen-synthetic needs --out DIR")
    ext = None if args.format == "netpbm" else ".f32"
    paths = write_corpus(args.out, args.count, args.seed or 0, args.size, args.channels, ext)
    print(f"wrote {len(paths)} images to {args.out}")


def cmd_embed(args):
    if not args.out:
        raise UsageError("embed needs --out DIR")
    cfg = _config(args, strength=args.strength)
    wt = cfg.ground_truth()
    os.makedirs(args.out, exist_ok=True)
    scores = []
    for path in list_images(args.input):
        x = load_image(path)
        bank = ReferenceDecoder.for_image(cfg.pattern_seed, cfg.m, x.shape).bank
        y = embed(x, wt, cfg.embedding(), bank)
        save_image(y, os.path.join(args.out, os.path.basename(path)))
        scores.append(ssim(x, y) if min(x.shape[1:]) >= 8 else float("nan"))
    if not scores:
        raise CertmarkError(f"no images found in {args.input}")
    print(f"embedded {len(scores)} images (watermark {wt}); mean SSIM {np.nanmean(scores):.4f}")


def cmd_detect(args):
    cfg = _config(args)
    wt = cfg.ground_truth()
    x = load_image(args.image)
    with DecoderSource(cfg) as src:
        oracle = make_oracle(src.for_shape(x.shape), wt, cfg, "smoothed" if args.smoothed else "base")
        ba = oracle.ba(x)
        verdict = "watermarked" if oracle(x) else "not watermarked"
    text = f"{verdict}\nBA={ba:.6g}\n"
    _write_text(text, args.out)


def cmd_certify(args):
    cfg = _config(args)
    paths = list(args.images)
    directory = args.input or (None if paths else cfg.watermarked_dir)
    if directory:
        paths += list_images(directory)
    if not paths:
        raise UsageError("certify needs image paths, --input DIR or watermarked_dir in the config")
    images = [NamedImage(os.path.basename(p), load_image(p)) for p in paths]
    wt = cfg.ground_truth()
    results = certify_images(images, cfg, wt)
    rows = []
    for item, per_method in zip(images, results):
        for mth in cfg.methods:
            for iv in per_method[mth]:
                rows.append([item.name, mth, "%.6g" % iv.radius, "%.6g" % iv.ba_lower,
                             "%.6g" % iv.ba_upper, "%.6g" % iv.confidence])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image", "method", "R", "BA_lower", "BA_upper", "confidence"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()


def _emit(rows, args):
    fmt = args.format or (format_for_path(args.out) if args.out else "csv")
    if args.out:
        emit_results(rows, fmt, args.out)
    else:
        sys.stdout.write(format_csv(rows) if fmt == "csv" else format_json(rows))


def cmd_eval_certified(args):
    cfg = _config(args)
    wdir = args.watermarked or cfg.watermarked_dir
    ndir = args.nonwatermarked or cfg.nonwatermarked_dir
    if not wdir and not ndir:
        raise UsageError("eval-certified needs watermarked_dir and/or nonwatermarked_dir")
    wm = load_dataset(wdir) if wdir else []
    nwm = load_dataset(ndir) if ndir else []
    _emit(eval_certified(wm, nwm, cfg), args)


def cmd_eval_empirical(args):
    cfg = _config(args)
    goal = args.goal or cfg.attack_goal
    directory = args.input or (cfg.watermarked_dir if goal == "removal" else cfg.nonwatermarked_dir)
    if not directory:
        raise UsageError("eval-empirical needs --input DIR or a dataset directory in the config")
    images = load_dataset(directory)
    pool = load_dataset(cfg.watermarked_dir) if goal == "forgery" and cfg.watermarked_dir else None
    rows = eval_empirical(images, cfg, args.attack, goal, args.target, init_pool=pool)
    _emit(rows, args)


def cmd_attack(args):
    cfg = _config(args)
    goal = args.goal or cfg.attack_goal
    target = args.target or cfg.attack_target
    wt = cfg.ground_truth()
    x = as_array(load_image(args.image))
    budget = cfg.budget(args.R)
    want = goal == "forgery"
    with DecoderSource(cfg) as src:
        D = src.for_shape(x.shape)
        oracle = make_oracle(D, wt, cfg, target)
        adversarial = lambda img: bool(oracle(img)) == want  # noqa: E731
        queries = None
        if args.attack == "jpeg":
            best = x
            for Q in cfg.attack_quality:
                cand = as_array(quality_compress(x, Q))
                if np.linalg.norm(cand - x) <= args.R and adversarial(cand):
                    best = cand
                    break
            attacked = best
        elif args.attack == "blackbox":
            if goal == "removal":
                init, _ = compression_init(x, adversarial)
            else:
                init = forgery_seed_image(x.shape, cfg, wt)
            if init is None:
                raise InitNotAdversarial("no compressed version of the image is adversarial")
            out = blackbox_attack(x, oracle, goal, init, budget, seed=cfg.master_seed)
            attacked, queries = x + out.delta.delta, out.queries_used
        else:
            w_T = attack_target(cfg, ImageTensor(x), wt, goal)
            if args.attack == "whitebox":
                out = whitebox_attack(x, D, w_T, budget)
            else:
                out = adaptive_whitebox_attack(x, D, w_T, cfg.sigma, budget, seed=cfg.master_seed)
            attacked, queries = x + out.delta.delta, out.queries_used
        report = {
            "image": os.path.basename(args.image),
            "image_id": image_id_of(x),
            "attack": args.attack, "goal": goal, "target": target, "R": args.R,
            "l2_norm": float(np.linalg.norm(attacked - x)),
            "ba_before": oracle.ba(x), "ba_after": oracle.ba(attacked),
            "detected_before": bool(oracle(x)), "detected_after": bool(oracle(attacked)),
            "queries": queries,
        }
        report["within_budget"] = report["l2_norm"] <= args.R * (1 + 1e-9)
        report["success"] = report["detected_after"] == want and report["within_budget"]
    if args.save:
        save_image(np.clip(attacked, 0.0, 1.0), args.save)
    _write_text(json.dumps(report, indent=2) + "\n", args.out)


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "embed": cmd_embed,
    "detect": cmd_detect,
    "certify": cmd_certify,
    "eval-certified": cmd_eval_certified,
    "eval-empirical": cmd_eval_empirical,
    "attack": cmd_attack,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:          # --help / --version
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("certmark: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"certmark {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CertmarkError, OSError, ValueError) as exc:
        print(f"certmark {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK

