"""
Exact sum-of-squares certification: polynomials, Gram problems,
symmetry blocks, SDP solve, rounding and verification.
"""
