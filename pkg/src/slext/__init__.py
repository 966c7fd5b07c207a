"""Self-adjoint extensions of singular Sturm-Liouville operators."""

__version__ = "0.1.0"
