"""membench: pattern-driven memory benchmarking with polyhedral codegen."""

__version__ = "0.1.0"
