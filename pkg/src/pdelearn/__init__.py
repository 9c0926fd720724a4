"""pdelearn: data-driven discovery of governing PDEs.

Fit a network to scattered noisy observations of a physical process,
generate dense meta-data and exact derivatives from it, and select a
sparse equation from a candidate term library with sequential threshold
ridge regression.
"""

__version__ = "0.1.0"
