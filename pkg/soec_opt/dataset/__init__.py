"""Sampling campaigns and dataset files."""
