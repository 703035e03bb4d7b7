"""Exact and sampled computations: dyadic constants, lacunary series, surface groups."""
