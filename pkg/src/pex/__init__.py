"""Personalized experimentation toolkit.

Trains heterogeneous-treatment-effect models on randomized-experiment
logs, converts them into linear-utility decision policies, evaluates the
policies offline (off-policy estimators plus multi-objective search) and
online (simulated environment), and orchestrates the three-phase workflow
through the ``pex`` command-line tool.
"""

from pex._kernels import ACTIVE_BACKEND

__version__ = "0.1.0"

__all__ = ["ACTIVE_BACKEND", "__version__"]
