"""Toolkit for measuring and serving EBCL character-threshold compliance of
LLM-generated Chinese text."""

from .errors import SinogateError

__all__ = ["SinogateError"]
__version__ = "0.1.0"
