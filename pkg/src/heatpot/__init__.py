"""Heat-potential solvers for moving-boundary problems."""

__version__ = "0.1.0"
