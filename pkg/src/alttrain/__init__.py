"""Alternate stochastic-gradient training for hard-parameter-sharing
multi-task networks: model, data pipeline, optimizers, and experiment
harness, on top of deterministic dense kernels."""

__version__ = "0.1.0"
