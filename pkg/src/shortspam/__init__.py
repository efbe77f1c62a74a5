"""Detection and forensics for malicious short URLs."""

__version__ = "0.1.0"
