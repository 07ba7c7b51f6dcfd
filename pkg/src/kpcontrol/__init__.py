"""Minimum-energy pulses for three-level population transfer via k+p sub-Riemannian geodesics."""
from .errors import AccuracyError, InvalidInputError, UnsupportedProblemError
from .matcore import *  # noqa: F401,F403
from .liealg import *  # noqa: F401,F403
from .driftfree import *  # noqa: F401,F403
from .geodesic import *  # noqa: F401,F403
from .pmpflow import *  # noqa: F401,F403
from .propagate import *  # noqa: F401,F403
from .oracle import *  # noqa: F401,F403
from .formats import ConfigError, RunConfig, load_config, read_pulses, write_pulses

__version__ = "0.1.0"
