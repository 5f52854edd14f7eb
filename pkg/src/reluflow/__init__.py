"""Numerical lab for gradient-flow and SGD convergence of shallow ReLU networks.

Submodules:
  linalg       dense matrix primitives and norm identities
  data         sphere datasets, label generation, weight initialization
  network      forward pass, losses, exact subgradients, Jacobian
  certificate  initialization-time convergence certificates and width bounds
  envelope     scalar envelope ODE: integration, classification, alpha sweeps
  dynamics     Euler gradient flow, mini-batch SGD, trajectory validation
  spectral     Hermite coefficients, feature-Gram bounds, threshold studies
  harness      experiment grids, metric tracking, mode comparison
  reports      CSV/JSON/SVG serialization
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    certificate,
    data,
    dynamics,
    envelope,
    harness,
    linalg,
    network,
    reports,
    spectral,
)
