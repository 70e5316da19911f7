"""Maximum mean discrepancy with a multiscale inverse-multiquadratic kernel.

Biased V-statistic estimator; differentiable through the autodiff engine so it
can serve directly as a training loss.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ShapeError

KERNEL_SCALES = (0.05, 0.2, 0.9)


def _sq_dists(a: Tensor, b: Tensor) -> Tensor:
    aa = ad.sum_(ad.square(a), axis=1, keepdims=True)          # (n, 1)
    bb = ad.reshape(ad.sum_(ad.square(b), axis=1), (1, -1))    # (1, m)
    cross = ad.matmul(a, ad.transpose(b))
    return ad.add(ad.add(aa, bb), ad.mul(cross, -2.0))


def _kernel_mean(a: Tensor, b: Tensor) -> Tensor:
    d2 = _sq_dists(a, b)
    total = None
    for s in KERNEL_SCALES:
        term = ad.mul(ad.power(ad.add(d2, s * s), -1.0), s * s)
        total = term if total is None else ad.add(total, term)
    return ad.mean(total)


def mmd2(a, b) -> Tensor:
    """Squared MMD between sample sets ``a`` (n, d) and ``b`` (m, d)."""
    a, b = ad.as_tensor(a), ad.as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(f"incompatible sample shapes {a.shape} vs {b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ShapeError("MMD needs nonempty sample sets")
    return ad.add(ad.add(_kernel_mean(a, a), _kernel_mean(b, b)),
                  ad.mul(_kernel_mean(a, b), -2.0))


def mmd2_value(a: np.ndarray, b: np.ndarray) -> float:
    with ad.no_grad():
        return mmd2(a, b).item()
