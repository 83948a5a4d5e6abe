"""Masked-LM scoring service."""

from .app import create_app
from .config import Settings
from .model import MaskedLanguageModel

__all__ = ["MaskedLanguageModel", "Settings", "create_app"]
