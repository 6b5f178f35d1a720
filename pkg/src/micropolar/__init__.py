"""Pseudo-spectral laboratory for the 3D incompressible micropolar equations."""
