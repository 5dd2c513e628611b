"""Two interacting particles on a 1D lattice driven by a Gaussian field pulse."""

__version__ = "0.1.0"
