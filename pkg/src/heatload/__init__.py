"""Neuro-metaheuristic heating-load regression on the energy-efficiency corpus."""

__version__ = "0.1.0"
