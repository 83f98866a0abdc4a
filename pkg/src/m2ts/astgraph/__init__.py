from .graph import (FEATURE_SEP, MAX_SCALES, AstGraph, AstNode, adjacency, build_scales,
                    normalize, power)
from .mini import NODE_TYPES, parse_mini, print_mini

__all__ = ["AstGraph", "AstNode", "FEATURE_SEP", "MAX_SCALES", "NODE_TYPES", "adjacency",
           "build_scales", "normalize", "parse_mini", "power", "print_mini"]
