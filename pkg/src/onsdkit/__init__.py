"""Automated optic nerve sheath diameter measurement from ultrasound video."""

__version__ = "0.1.0"
