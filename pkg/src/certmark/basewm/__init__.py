from .contract import Decoder
from .external import Endpoint, ExternalDecoder, external_decoder_call
from .reference import (
    DEFAULT_STRENGTH,
    PatternBank,
    ReferenceDecoder,
    SpreadSpectrumConfig,
    analytic_bit_probability,
    embed,
    gen_patterns,
    ss_logits,
    topk_labels,
)

__all__ = [
    "DEFAULT_STRENGTH", "Decoder", "Endpoint", "ExternalDecoder", "PatternBank",
    "ReferenceDecoder", "SpreadSpectrumConfig", "analytic_bit_probability", "embed",
    "external_decoder_call", "gen_patterns", "ss_logits", "topk_labels",
]
