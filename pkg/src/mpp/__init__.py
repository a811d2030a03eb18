"""Markov persuasion processes: benchmark LPs, partial-history solver and robust mechanisms."""

__version__ = "0.1.0"
