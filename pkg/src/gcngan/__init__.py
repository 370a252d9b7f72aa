"""GCN-GAN temporal link prediction for weighted dynamic networks."""

__version__ = "0.1.0"
