"""Beliaev damping of Bogoliubov phonons: dispersion, vertex, self-energy
quadrature and a finite-volume Friedrichs model."""

__version__ = "0.1.0"
