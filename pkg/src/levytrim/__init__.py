"""Simulation and verification toolkit for trimmed Lévy processes at small times."""
