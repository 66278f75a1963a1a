"""Calibration workbench - verification of generalized calibrations on structured manifolds."""

__version__ = "0.1.0"
