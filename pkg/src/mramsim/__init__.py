"""Multi-state MRAM cell, analog neuron and quantized-network simulator."""
from .kernel import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
