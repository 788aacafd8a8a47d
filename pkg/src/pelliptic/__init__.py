"""Numerical toolkit for p-ellipticity of complex coefficient fields and
discrete checks of the associated resolvent, regularity and kernel bounds."""

__version__ = "0.1.0"
