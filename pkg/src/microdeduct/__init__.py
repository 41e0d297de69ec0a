"""Contract inference and deductive verification for MicroC programs."""

__version__ = "0.1.0"
