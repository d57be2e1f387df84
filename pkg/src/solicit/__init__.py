"""Repeated solicitation model: exact and simulated campaign statistics."""
