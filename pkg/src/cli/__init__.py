"""Command-line interface for KG Path Forge (``kgpf``)."""

from .cli import cli

__all__ = ["cli"]
