"""Constrained grid solves, Pareto fronts, and contour scans."""
