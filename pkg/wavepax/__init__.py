"""
Gaussian wavepacket parametrix, phase equations and observability constants
for Schroedinger operators with time-dependent quadratic Hamiltonians.
"""

__version__ = "0.1.0"
