"""Corpus-to-model pipeline for notional pronoun agreement."""

__version__ = "1.0.0"
