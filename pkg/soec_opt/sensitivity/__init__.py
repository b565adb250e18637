"""Variance-based sensitivity analysis."""
