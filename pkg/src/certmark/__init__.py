"""certmark: certified bitwise-accuracy bounds for image watermark detection
under l2-bounded perturbations, via randomized smoothing of the decoder."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DetectorConfig,
    DetectorMode,
    ImageTensor,
    Perturbation,
    Watermark,
    bitwise_accuracy,
    detect,
)
from .certify import CertifiedInterval, certify_batch  # noqa: E402
from .smoothing import (  # noqa: E402
    SmoothedDetector,
    SmoothingConfig,
    SmoothingMethod,
    collect_batch,
    smoothed_ba,
)

__all__ = [
    "CertifiedInterval", "DetectorConfig", "DetectorMode", "ImageTensor", "Perturbation",
    "SmoothedDetector", "SmoothingConfig", "SmoothingMethod", "Watermark", "bitwise_accuracy",
    "certify_batch", "collect_batch", "detect", "smoothed_ba",
]
