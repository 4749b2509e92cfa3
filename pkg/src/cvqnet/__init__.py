"""Gaussian continuous-variable models of microwave teleportation and
entanglement swapping with Josephson mixers."""
__version__ = "0.1.0"

from . import gaussian, measures, tmsq, teleport, entswap, measure_sim, calibrate  # noqa: E402,F401
