"""JPEG codec core: color transforms, DCT, quantization, entropy coding."""

from .color import rgb_to_ycbcr, ycbcr_to_rgb
from .dct import forward_dct, inverse_dct, quantize, dequantize
from .codec import (
    JpegStream,
    CodecError,
    DecodeError,
    encode,
    decode,
    psnr,
    SUBSAMPLING_MODES,
)

__all__ = [
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
    "forward_dct",
    "inverse_dct",
    "quantize",
    "dequantize",
    "JpegStream",
    "CodecError",
    "DecodeError",
    "encode",
    "decode",
    "psnr",
    "SUBSAMPLING_MODES",
]
