"""Design and analysis tools for parallel-axis two-crystal entangled photon-pair sources."""

__version__ = "0.1.0"
