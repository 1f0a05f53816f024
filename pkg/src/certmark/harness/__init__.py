"""Experiment harness: config files, corpus evaluation, reporting and the CLI."""
from .config import ExperimentConfig, load_config, parse_config_text
from .evaluate import (
    DecoderSource,
    EvalRow,
    NamedImage,
    certified_detected,
    certify_images,
    cfnr,
    cfpr,
    eval_certified,
    eval_empirical,
    load_dataset,
    possibly_detected,
)
from .metrics import ssim
from .report import emit_results, read_results
from .synthetic import synthetic_images, write_corpus

__all__ = [
    "DecoderSource", "EvalRow", "ExperimentConfig", "NamedImage", "certified_detected",
    "certify_images", "cfnr", "cfpr", "emit_results", "eval_certified", "eval_empirical",
    "load_config", "load_dataset", "parse_config_text", "possibly_detected", "read_results",
    "ssim", "synthetic_images", "write_corpus",
]
