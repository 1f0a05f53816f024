"""Corpus-level evaluation: certified (CFNR/CFPR) and empirical (FNR/FPR) rates."""
from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..attacks import (
    adaptive_whitebox_attack,
    blackbox_attack,
    compression_init,
    quality_compress,
    whitebox_attack,
)
from ..basewm import ExternalDecoder, ReferenceDecoder, embed
from ..certify import CertifiedInterval, certify_batch
from ..core import DetectorConfig, DetectorMode, ImageTensor, Watermark, as_array
from ..errors import CertmarkError, ImageFailure, InitNotAdversarial
from ..imageio import list_images, load_image
from ..smoothing import (
    BaseDetector,
    SmoothedDetector,
    collect_batch,
    image_id_of,
    stream_key,
)
from .config import ExperimentConfig
from .synthetic import smooth_field

ATTACKS = ("none", "jpeg", "blackbox", "whitebox", "adaptive")


@dataclass(frozen=True)
class EvalRow:
    R: float
    cfnr: float | None = None
    cfpr: float | None = None
    fnr: float | None = None
    fpr: float | None = None
    tau: float | None = None
    sigma: float | None = None
    N: int | None = None
    alpha: float | None = None
    method: str | None = None
    runtime_seconds: float | None = None

    def __post_init__(self):
        for name in ("cfnr", "cfpr", "fnr", "fpr"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a rate in [0, 1]")


@dataclass(frozen=True)
class NamedImage:
    name: str
    image: ImageTensor


def load_dataset(directory) -> list[NamedImage]:
    paths = list_images(directory)
    if not paths:
        raise CertmarkError(f"no images found in {directory}")
    return [NamedImage(os.path.basename(p), load_image(p)) for p in paths]


def as_named(images) -> list[NamedImage]:
    out = []
    for i, img in enumerate(images):
        if isinstance(img, NamedImage):
            out.append(img)
        else:
            out.append(NamedImage(f"image{i:04d}", img if isinstance(img, ImageTensor) else ImageTensor(img)))
    return out


class DecoderSource:
    """Hands out a decoder for a given image shape.

    The reference decoder's patterns depend on the image shape, so one decoder
    is built per distinct shape; an external decoder is shared.
    """

    def __init__(self, cfg: ExperimentConfig, decoder=None):
        self.cfg = cfg
        self._fixed = decoder
        self._owned = None
        self._lock = threading.Lock()
        if decoder is None and cfg.decoder == "external":
            self._owned = ExternalDecoder(cfg.decoder_command, cfg.m, cfg.decoder_timeout, cfg.threads)
            self._fixed = self._owned

    def for_shape(self, shape):
        if self._fixed is not None:
            return self._fixed
        with self._lock:
            return ReferenceDecoder.for_image(self.cfg.pattern_seed, self.cfg.m, tuple(shape))

    def close(self):
        if self._owned is not None:
            self._owned.close()
            self._owned = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# --------------------------------------------------------------------------
# detection of intervals
# --------------------------------------------------------------------------

def certified_detected(iv: CertifiedInterval, det: DetectorConfig) -> bool:
    """True when every BA in the interval is detected."""
    if iv.ba_lower >= det.tau:
        return True
    return det.mode is DetectorMode.DOUBLE_TAILED and iv.ba_upper <= 1.0 - det.tau


def possibly_detected(iv: CertifiedInterval, det: DetectorConfig) -> bool:
    """True when some BA in the interval is detected."""
    if iv.ba_upper >= det.tau:
        return True
    return det.mode is DetectorMode.DOUBLE_TAILED and iv.ba_lower <= 1.0 - det.tau


def cfnr(intervals, det: DetectorConfig) -> float:
    intervals = list(intervals)
    return sum(not certified_detected(iv, det) for iv in intervals) / len(intervals)


def cfpr(intervals, det: DetectorConfig) -> float:
    intervals = list(intervals)
    return sum(possibly_detected(iv, det) for iv in intervals) / len(intervals)


# --------------------------------------------------------------------------
# certified evaluation
# --------------------------------------------------------------------------

def _map_images(fn, images, threads: int):
    """Apply ``fn`` to every image, in input order, on a bounded pool."""

    def guarded(item):
        try:
            return fn(item)
        except CertmarkError as exc:
            if isinstance(exc, ImageFailure):
                raise
            raise ImageFailure(item.name, exc) from exc

    if threads > 1 and len(images) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(guarded, images))
    return [guarded(it) for it in images]


def certify_images(images, cfg: ExperimentConfig, wt: Watermark, source: DecoderSource | None = None,
                   methods=None) -> list[dict[str, list[CertifiedInterval]]]:
    """Per image: ``{method: [interval for R in cfg.R_grid]}``, one batch per image."""
    images = as_named(images)
    methods = tuple(methods or cfg.methods)
    own = source is None
    source = source or DecoderSource(cfg)
    smooth = cfg.smoothing(methods[0])

    def one(item: NamedImage):
        D = source.for_shape(item.image.shape)
        batch = collect_batch(item.image, D, wt, smooth, image_id=image_id_of(item.image))
        return {mth: certify_batch(batch, wt, mth, cfg.alpha, cfg.sigma, cfg.R_grid, cfg.k, cfg.k_prime)
                for mth in methods}

    try:
        return _map_images(one, images, cfg.threads)
    finally:
        if own:
            source.close()


def rows_from_intervals(wm_ivs, nwm_ivs, cfg: ExperimentConfig, methods=None,
                        runtime: float | None = None) -> list[EvalRow]:
    methods = tuple(methods or cfg.methods)
    det = cfg.detector
    rows = []
    for r_idx, R in enumerate(cfg.R_grid):
        for mth in methods:
            rows.append(EvalRow(
                R=R,
                cfnr=cfnr((d[mth][r_idx] for d in wm_ivs), det) if wm_ivs else None,
                cfpr=cfpr((d[mth][r_idx] for d in nwm_ivs), det) if nwm_ivs else None,
                tau=cfg.tau, sigma=cfg.sigma, N=cfg.N, alpha=cfg.alpha, method=mth,
                runtime_seconds=runtime,
            ))
    return rows


def eval_certified(watermarked, nonwatermarked, cfg: ExperimentConfig,
                   source: DecoderSource | None = None, wt: Watermark | None = None) -> list[EvalRow]:
    """CFNR over ``watermarked`` and CFPR over ``nonwatermarked`` at every grid R.

    Either set may be empty, but not both. ``runtime_seconds`` is filled only
    when ``cfg.timing`` is set, so default output stays reproducible.
    """
    watermarked = as_named(watermarked or [])
    nonwatermarked = as_named(nonwatermarked or [])
    if not watermarked and not nonwatermarked:
        raise ValueError("need at least one image")
    wt = wt or cfg.ground_truth()
    t0 = time.perf_counter()
    own = source is None
    source = source or DecoderSource(cfg)
    try:
        wm = certify_images(watermarked, cfg, wt, source) if watermarked else []
        nwm = certify_images(nonwatermarked, cfg, wt, source) if nonwatermarked else []
    finally:
        if own:
            source.close()
    runtime = time.perf_counter() - t0 if cfg.timing else None
    return rows_from_intervals(wm, nwm, cfg, runtime=runtime)


# --------------------------------------------------------------------------
# empirical evaluation
# --------------------------------------------------------------------------

def _image_rng(cfg: ExperimentConfig, image: ImageTensor, tag: str) -> np.random.Generator:
    return np.random.default_rng(stream_key(cfg.master_seed, f"{tag}:{image_id_of(image)}"))


def attack_target(cfg: ExperimentConfig, image: ImageTensor, wt: Watermark, goal: str) -> Watermark:
    """Target bits for a gradient attack: ``wt`` to forge, an independent random string to remove."""
    if goal == "forgery":
        return wt
    return Watermark.random(wt.m, _image_rng(cfg, image, "target"))


def make_oracle(D, wt: Watermark, cfg: ExperimentConfig, target: str | None = None, method: str | None = None):
    target = target or cfg.attack_target
    if target == "base":
        return BaseDetector(D, wt, cfg.detector)
    return SmoothedDetector(D, wt, cfg.smoothing(method, N=cfg.N_empirical), cfg.detector)


def forgery_seed_image(shape, cfg: ExperimentConfig, wt: Watermark, watermarked=None) -> np.ndarray:
    """A watermarked image of the given shape to start a black-box forgery from."""
    for item in as_named(watermarked or []):
        if item.image.shape == tuple(shape):
            return as_array(item.image)
    rng = np.random.default_rng(cfg.master_seed)
    base = smooth_field(rng, shape[1], shape[0]) if shape[1] == shape[2] and 32 <= shape[1] <= 128 \
        else ImageTensor(np.full(shape, 0.5))
    bank = ReferenceDecoder.for_image(cfg.pattern_seed, cfg.m, shape).bank
    return as_array(embed(base, wt, cfg.embedding(), bank))


def attack_outcomes(item: NamedImage, D, wt: Watermark, cfg: ExperimentConfig, attack: str,
                    goal: str, oracle, init_pool=None) -> list[bool]:
    """For each grid R: is there an adversarial image within distance R of ``x``?"""
    x = as_array(item.image)
    want = goal == "forgery"
    adversarial = lambda img: bool(oracle(img)) == want  # noqa: E731
    base = adversarial(x)
    grid = cfg.R_grid
    if attack == "none":
        return [base] * len(grid)

    if attack == "jpeg":
        hits = []
        for Q in cfg.attack_quality:
            cand = as_array(quality_compress(x, Q))
            if adversarial(cand):
                hits.append(float(np.linalg.norm(cand - x)))
        best = min(hits, default=np.inf)
        return [base or best <= R for R in grid]

    if attack == "blackbox":
        if goal == "removal":
            init, _ = compression_init(x, adversarial)
        else:
            init = forgery_seed_image(x.shape, cfg, wt, init_pool)
            if not adversarial(init):
                init = None
        if init is None:
            return [base] * len(grid)
        try:
            out = blackbox_attack(x, oracle, goal, init, cfg.budget(max(grid)),
                                  seed=int(_image_rng(cfg, item.image, "bb").integers(2**31)))
        except InitNotAdversarial:
            return [base] * len(grid)
        dist = out.delta.l2_norm if out.success else np.inf
        return [base or dist <= R for R in grid]

    if attack in ("whitebox", "adaptive"):
        w_T = attack_target(cfg, item.image, wt, goal)
        res = []
        for R in grid:
            if R == 0 or base:
                res.append(base)
                continue
            budget = cfg.budget(R)
            if attack == "whitebox":
                out = whitebox_attack(x, D, w_T, budget, is_adversarial=adversarial)
            else:
                seed = int(_image_rng(cfg, item.image, "adaptive").integers(2**31))
                out = adaptive_whitebox_attack(x, D, w_T, cfg.sigma, budget, seed, is_adversarial=adversarial)
            res.append(out.success)
        return res

    raise ValueError(f"unknown attack {attack!r}; choose from {ATTACKS}")


def eval_empirical(images, cfg: ExperimentConfig, attack: str | None = None, goal: str | None = None,
                   target: str | None = None, source: DecoderSource | None = None,
                   wt: Watermark | None = None, init_pool=None) -> list[EvalRow]:
    """Empirical FNR (removal) or FPR (forgery) of ``attack`` at every grid R."""
    images = as_named(images)
    if not images:
        raise ValueError("need at least one image")
    attack = attack or cfg.attack
    goal = goal or cfg.attack_goal
    target = target or cfg.attack_target
    if attack not in ATTACKS:
        raise ValueError(f"unknown attack {attack!r}; choose from {ATTACKS}")
    wt = wt or cfg.ground_truth()
    method = cfg.methods[0]
    t0 = time.perf_counter()
    own = source is None
    source = source or DecoderSource(cfg)

    def one(item):
        D = source.for_shape(item.image.shape)
        oracle = make_oracle(D, wt, cfg, target, method)
        return attack_outcomes(item, D, wt, cfg, attack, goal, oracle, init_pool)

    try:
        outcomes = np.array(_map_images(one, images, cfg.threads), dtype=bool)
    finally:
        if own:
            source.close()
    rates = outcomes.mean(axis=0)
    runtime = time.perf_counter() - t0 if cfg.timing else None
    smoothed = target == "smoothed"
    rows = []
    for R, rate in zip(cfg.R_grid, rates):
        rows.append(EvalRow(
            R=R,
            fnr=float(rate) if goal == "removal" else None,
            fpr=float(rate) if goal == "forgery" else None,
            tau=cfg.tau,
            sigma=cfg.sigma if smoothed else None,
            N=cfg.N_empirical if smoothed else None,
            alpha=None,
            method=method if smoothed else "base",
            runtime_seconds=runtime,
        ))
    return rows

