"""Exact index checks for matrix factorizations of isolated singularities.

The package computes both sides of a Riemann-Roch style identity for
matrix factorizations over the rationals: Ext-group Euler characteristics
via Groebner bases on one side, and residues of Chern-Weil style forms
obtained from a Hochschild-theoretic supertrace on the other.
"""

__version__ = "0.1.0"
