"""Lossy source coding with unit-lag feedforward side information.

The decoder emits each reconstruction symbol before seeing the matching
source symbol; the encoder exploits that causal reveal to reach the
rate-distortion bound with a fixed number of linear passes.
"""

from .bits import BitString, pack_bits, unpack_bits
from .codec import (
    CodecConfig,
    DecodeResult,
    EncodeResult,
    FeedforwardOracle,
    MeasureReport,
    decode,
    encode,
    measure,
    plan_passes,
)
from .coder import (
    ConditionalModel,
    Frame,
    QuantizedModel,
    coded_length,
    compress,
    decode_frame_prefix,
    decompress,
    model_digest,
    quantize,
    quantize_channel,
)
from .erasure import (
    ERASED,
    ErasurePattern,
    ErasureSource,
    apply_erasures,
    bec_feedback_receive,
    bec_feedback_send,
    beq_decode,
    beq_encode,
    erasure_distortion,
)
from .errors import (
    CausalityError,
    CodingError,
    ConfigError,
    FfscError,
    InconsistentFrameError,
    ModelError,
    QuantizationError,
    ShapingError,
    StreamFormatError,
    TruncatedFrameError,
)
from .model import (
    Alphabet,
    DistortionMatrix,
    Pmf,
    TestChannel,
    TypicalityParams,
    binary_entropy,
    blahut_arimoto,
    bundled_model_names,
    conditional_entropy,
    entropy,
    expected_distortion,
    growth_factor,
    is_jointly_typical,
    is_strongly_typical,
    load_model,
    mutual_information,
)
from .rng import SplitMix64
from .shaping import deshape, deshape_raw, shape, shaped_length

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "BitString",
    "CausalityError",
    "CodecConfig",
    "CodingError",
    "ConditionalModel",
    "ConfigError",
    "DecodeResult",
    "DistortionMatrix",
    "ERASED",
    "EncodeResult",
    "ErasurePattern",
    "ErasureSource",
    "FeedforwardOracle",
    "FfscError",
    "Frame",
    "InconsistentFrameError",
    "MeasureReport",
    "ModelError",
    "Pmf",
    "QuantizationError",
    "QuantizedModel",
    "ShapingError",
    "SplitMix64",
    "StreamFormatError",
    "TestChannel",
    "TruncatedFrameError",
    "TypicalityParams",
    "apply_erasures",
    "bec_feedback_receive",
    "bec_feedback_send",
    "beq_decode",
    "beq_encode",
    "binary_entropy",
    "blahut_arimoto",
    "bundled_model_names",
    "coded_length",
    "compress",
    "conditional_entropy",
    "decode",
    "decode_frame_prefix",
    "decompress",
    "deshape",
    "deshape_raw",
    "encode",
    "entropy",
    "erasure_distortion",
    "expected_distortion",
    "growth_factor",
    "is_jointly_typical",
    "is_strongly_typical",
    "load_model",
    "measure",
    "model_digest",
    "mutual_information",
    "pack_bits",
    "plan_passes",
    "quantize",
    "quantize_channel",
    "shape",
    "shaped_length",
    "unpack_bits",
]
