"""Virtual QRAM synthesis, noisy path simulation, grid mapping and resource analysis."""

__version__ = "0.1.0"
