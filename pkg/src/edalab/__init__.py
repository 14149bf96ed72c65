"""Estimation of distribution algorithms: iBOA, BOA, PBIL, cGA and a dependency-tree EDA."""

__version__ = "0.1.0"
