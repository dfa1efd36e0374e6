"""zrplab: exact-arithmetic toolkit for integrable multispecies zero range processes."""

__version__ = "0.1.0"
