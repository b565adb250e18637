"""Sigmoid MLP surrogates trained with Levenberg-Marquardt."""
