"""Fusions: convex-order dominance, extreme and exposed fusions, moment
persuasion and categorization on discretized priors."""
from .measure import Box, ConvexPartition, ConvexRegion, DiscreteMeasure, GridMeasure, barycenter
from .power import PowerDiagram, lift
from .order import check_convex_order, cartier_decompose

__version__ = "0.1.0"

__all__ = ["Box", "ConvexPartition", "ConvexRegion", "DiscreteMeasure", "GridMeasure", "barycenter",
           "PowerDiagram", "lift", "check_convex_order", "cartier_decompose", "__version__"]
