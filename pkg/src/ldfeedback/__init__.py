"""Orthogonal linear-dispersion space-time codes with limited feedback.

Simulation library and CLI for constructing orthogonal LD code sets,
evaluating their mutual information and received SNR under
no/statistical/quantized/perfect transmitter channel knowledge, and
numerically certifying the structural claims the constructions rely on.
"""

__version__ = "0.1.0"
