"""Schemas package."""


