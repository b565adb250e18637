"""Unit conversions and performance indices."""
