"""Numerical laboratory for the two-parameter quantum sl2.

Submodules: :mod:`qcl.rep` (representations and coproduct),
:mod:`qcl.crystal`, :mod:`qcl.orbit` (dual group and dressing orbits),
:mod:`qcl.chains`, :mod:`qcl.qwalk`, :mod:`qcl.sde`, :mod:`qcl.stats`,
:mod:`qcl.experiments` and the command line in :mod:`qcl.cli`.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from ._accel import BACKEND
from .rep import HighestWeight, Params

__all__ = ["BACKEND", "HighestWeight", "Params", "__version__"]
