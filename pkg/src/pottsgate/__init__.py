"""Exact energy-landscape analysis and Metropolis simulation of the Potts model on a torus."""
