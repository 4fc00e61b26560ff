"""Offline embedding export for reaction datasets and template libraries."""

from .encoders import EncoderError, HashEncoder, TransformerEncoder, build_encoder
from .export import ExportError, ExportJob, export
from .store import StoreFormatError, read_store, write_store

__version__ = "0.1.0"
