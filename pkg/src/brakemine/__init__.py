"""Brake-scenario mining: tag driving logs, find brake-causing guests,
describe and classify the interactions, and retrieve them by category or
similarity."""

__version__ = "0.1.0"
