"""Integration and acceptance tests for the Furstenberg lab."""
