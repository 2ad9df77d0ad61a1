"""Multilingual pre-training corpus construction and tokenizer/embedding analysis."""

__version__ = "0.1.0"
