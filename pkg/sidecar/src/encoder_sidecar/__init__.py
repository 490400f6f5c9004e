"""Encoder sidecar: pair-embedding service behind the provider wire protocol."""

from .encoders import SeededProjectionEncoder, TransformerEncoder, load_encoder
from .server import EncoderServer, serve

__version__ = "0.1.0"

__all__ = [
    "EncoderServer",
    "SeededProjectionEncoder",
    "TransformerEncoder",
    "load_encoder",
    "serve",
    "__version__",
]
