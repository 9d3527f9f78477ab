"""Certified interval bounds for the normalized prime-counting remainder
(t - psi(t))/sqrt(t) computed from tables of Riemann zeta zeros, with a
segmented-sieve oracle for desk-scale validation and bound chaining to
theta(x), pi*(x), and pi(x)."""

__version__ = "0.1.0"
