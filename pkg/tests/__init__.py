"""Test suite for the Furstenberg lab."""
