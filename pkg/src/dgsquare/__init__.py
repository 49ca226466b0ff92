"""dgsquare: exact computer algebra for nonpositive DG rings over Q.

Semi-free resolutions, homomorphism lifting, homotopies, cylinder
constructions, DG modules, and the rectangle / squaring operations,
all in exact rational arithmetic.
"""

__version__ = "0.1.0"
