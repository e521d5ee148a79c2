"""Simulation of qubit-cavity Bell-cat experiments with joint Wigner tomography."""
from .hilbert import TruncationError
from .noise import NoiseModel
from .protocol import DetectorSetting, prepare_bell_cat
from .tomography import GridSpec, WignerGrid

__all__ = ["DetectorSetting", "GridSpec", "NoiseModel", "TruncationError", "WignerGrid",
           "prepare_bell_cat"]
__version__ = "0.1.0"
