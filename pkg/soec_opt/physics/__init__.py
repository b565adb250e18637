"""Reduced-order three-segment cell simulator."""
