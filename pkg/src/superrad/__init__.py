"""Cavity-QED simulation laboratory for the superradiance-to-lasing crossover."""
from .params import SystemParams, crossover_xi, derive, regime_label, solve_kappa_for_xi

__version__ = "0.1.0"
__all__ = ["SystemParams", "crossover_xi", "derive", "regime_label", "solve_kappa_for_xi"]
