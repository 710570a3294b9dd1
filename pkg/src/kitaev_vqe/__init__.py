"""Kitaev chain exact diagonalization, Jordan-Wigner mapping and statevector VQE."""

__version__ = "0.1.0"
