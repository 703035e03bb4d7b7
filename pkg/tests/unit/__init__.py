"""Unit tests for the Furstenberg lab."""
