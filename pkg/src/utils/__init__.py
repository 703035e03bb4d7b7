"""Seeding and output helpers."""
