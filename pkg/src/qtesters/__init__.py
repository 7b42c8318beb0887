"""Unitary-tester toolkit: outcome statistics, entropic bounds, mutually
unbiased unitary bases, and two-way QKD Monte-Carlo simulation."""

from . import bounds, cli, kernels, muub, ppovm, qkd, qmath, tester

__version__ = "0.1.0"

__all__ = ["bounds", "cli", "kernels", "muub", "ppovm", "qkd", "qmath", "tester",
           "__version__"]
