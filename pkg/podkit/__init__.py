"""podkit: POD bases, discrete Agmon-type inequalities and POD-Galerkin heat models."""

__version__ = "0.1.0"
