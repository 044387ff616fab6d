"""Turn-based leader/follower card game on a hex grid."""

from hexcollab._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
