"""Random cluster model dynamics, exact oracles and phase-coupling experiments."""

__version__ = "0.1.0"

from .graph import Graph, generate_random_regular  # noqa: E402
from .model import Configuration, ModelParams, PartialConfiguration, beta_c  # noqa: E402

__all__ = ["Graph", "generate_random_regular", "Configuration", "ModelParams",
           "PartialConfiguration", "beta_c", "__version__"]
