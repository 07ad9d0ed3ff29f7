"""
navier_cascade

Monte Carlo representation of three-dimensional incompressible Navier-Stokes
solutions: u(x,t) = h(x) E[Ξ(x,t)], with Ξ a product-type functional of a
random binary branching cascade driven by a majorizing kernel h.
"""

__version__ = "0.1.0"
