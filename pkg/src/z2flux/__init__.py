"""Z2 lattice gauge theory coupled to spinless fermions at half filling."""

__version__ = "0.1.0"
