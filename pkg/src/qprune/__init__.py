"""Quaternion-valued neural networks with iterative magnitude pruning,
built on a small numpy reverse-mode autodiff engine."""

__version__ = "0.1.0"

from .quaternion import Quaternion, as_matrix, hamilton, norm
from .tensor import Tape, Tensor

__all__ = ["Quaternion", "as_matrix", "hamilton", "norm", "Tape", "Tensor", "__version__"]
