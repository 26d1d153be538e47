"""1D bosons with contact interactions: CPWF trial functions, VMC and DMC."""

__version__ = "0.1.0"
