"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``QCL_PURE_PYTHON=1`` forces the numpy implementations.
"""

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("QCL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

radial_walk = kernels.radial_walk
joint_walk = kernels.joint_walk
bj_lambda = kernels.bj_lambda

__all__ = ["BACKEND", "kernels", "radial_walk", "joint_walk", "bj_lambda"]
