"""Logging and metrics collection."""
