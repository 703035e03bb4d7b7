"""Experiments built on the services: the skew product, invariant measures, cover towers."""
