"""Supergaussian source priors as functions of the broadband norm ``r``.

``contrast`` is the negative log-prior up to constants; ``mm_weight`` is
``contrast'(r) / r``, the per-frame weight of the quadratic majorizer.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

KINDS = ("laplacian", "generalized_gaussian")


@dataclass(frozen=True)
class ContrastModel:
    kind: str = "laplacian"
    beta: float = 1.0
    weight_floor: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown source model {self.kind!r}; choose from {KINDS}")
        if self.kind == "generalized_gaussian" and not 0.0 < self.beta <= 2.0:
            raise InvalidInput(f"shape beta must lie in (0, 2], got {self.beta}")
        if not self.weight_floor > 0.0:
            raise InvalidInput("weight_floor must be positive")


def _check_r(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0.0) or not np.all(np.isfinite(r)):
        raise InvalidInput("norms must be finite and non-negative")
    return r


def contrast(model: ContrastModel, r):
    r = _check_r(r)
    if model.kind == "laplacian":
        return r.copy() if r.ndim else float(r)
    out = np.power(r, model.beta)
    return out if r.ndim else float(out)


def mm_weight(model: ContrastModel, r):
    r = np.maximum(_check_r(r), model.weight_floor)
    if model.kind == "laplacian":
        out = 1.0 / r
    else:
        out = model.beta * np.power(r, model.beta - 2.0)
    return out if np.ndim(out) else float(out)
