"""Adam optimizer with per-parameter moment buffers and mask support."""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DimensionError


class Adam:
    """Standard Adam with bias correction.

    When a mask is supplied to :meth:`step`, gradients and parameter values
    at masked positions are forced to zero, so pruned weights stay exactly 0
    through retraining (their moment buffers never accumulate either).
    """

    def __init__(
        self,
        params: Sequence,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.tensor.data) for p in self.params]
        self.v = [np.zeros_like(p.tensor.data) for p in self.params]

    def step(self, mask: Optional[Mapping[str, np.ndarray]] = None) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for i, p in enumerate(self.params):
            t = p.tensor
            g = t.grad
            if g is None:
                g = np.zeros_like(t.data)
            if g.shape != t.data.shape or self.m[i].shape != t.data.shape:
                raise DimensionError(
                    f"adam: gradient/state shape {g.shape} does not match parameter "
                    f"{p.name} shape {t.data.shape}"
                )
            pm = mask.get(p.name) if mask is not None else None
            if pm is not None:
                if pm.shape != t.data.shape:
                    raise DimensionError(
                        f"adam: mask shape {pm.shape} does not match parameter "
                        f"{p.name} shape {t.data.shape}"
                    )
                g = g * pm
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            t.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(t.data.dtype, copy=False)
            if pm is not None:
                t.data *= pm
            t.grad = None
