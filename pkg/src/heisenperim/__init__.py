"""Sub-Finsler perimeter measures of surfaces in the Heisenberg group."""
__version__ = "0.1.0"
