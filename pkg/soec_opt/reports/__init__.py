"""Artifact writers for CLI commands."""
