"""Cross-encoder sentence-pair scorer for the normalization pipeline."""

__version__ = "0.1.0"
