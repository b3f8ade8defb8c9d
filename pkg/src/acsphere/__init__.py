"""Allen-Cahn critical points on round spheres under cohomogeneity-one symmetry."""

__version__ = "0.1.0"
