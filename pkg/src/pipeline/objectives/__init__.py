"""Toy policy, training objectives and finite-difference gradient checks."""
