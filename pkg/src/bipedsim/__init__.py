"""Planar flat-footed biped walking simulator with Bezier virtual-constraint
tracking and adaptive foot-placement velocity regulation."""

__version__ = "0.1.0"

from .model import RobotModel, GeneralizedState, Side, default_model

__all__ = ["RobotModel", "GeneralizedState", "Side", "default_model", "__version__"]
