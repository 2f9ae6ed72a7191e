"""cascadescan: reactive detection generalization for imitative DeFi attacks.

Turns one confirmed attack transaction trace into a reusable detection
pattern (semantic abstraction + token-type-aware asymmetric set similarity)
and scans decoded trace streams for imitations.
"""

__version__ = "0.1.0"
