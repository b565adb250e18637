"""Surrogate-assisted operating-point optimisation for a segmented SOEC."""
