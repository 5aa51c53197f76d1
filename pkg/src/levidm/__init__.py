"""Simulation and sensitivity toolkit for dark-matter searches with levitated sensors."""
__version__ = "0.1.0"
