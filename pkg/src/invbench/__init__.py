"""Benchmark of generative solvers (INN, CFM, cWGAN-GP, surrogate MCMC) for a
six-parameter, three-label inverse design problem with an analytic forward model."""

__version__ = "0.1.0"
