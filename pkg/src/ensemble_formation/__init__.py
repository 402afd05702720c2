"""Ensemble formation control: exact stochastic Lie algebra checks and Lie-extension tracking."""
