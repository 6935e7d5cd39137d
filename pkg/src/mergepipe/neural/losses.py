"""Binary classification losses and their analytic gradients.

p holds the true 0/1 labels, q the predicted probabilities.  Cross-entropy
and focal losses average per sample; the soft-F1 and Tversky losses are
set-level over the whole vector (per batch during training).  Probabilities
are clamped to [EPS, 1-EPS] before any log.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BadConfig, LengthMismatch

EPS = 1e-12


@dataclass(frozen=True)
class LossKind:
    kind: str  # cross_entropy | focal | f1 | tversky
    gamma: float = 2.0  # focal only
    alpha: float = 0.3  # tversky: false-positive weight
    beta: float = 0.7  # tversky: false-negative weight

    def __post_init__(self):
        if self.kind not in ("cross_entropy", "focal", "f1", "tversky"):
            raise BadConfig(f"unknown loss kind {self.kind!r}")
        if self.kind == "focal" and not self.gamma > 0:
            raise BadConfig("focal gamma must be > 0")
        if self.kind == "tversky":
            if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
                raise BadConfig("tversky needs alpha, beta >= 0 with alpha + beta > 0")

    @classmethod
    def cross_entropy(cls):
        return cls("cross_entropy")

    @classmethod
    def focal(cls, gamma: float = 2.0):
        return cls("focal", gamma=gamma)

    @classmethod
    def f1(cls):
        return cls("f1")

    @classmethod
    def tversky(cls, alpha: float = 0.3, beta: float = 0.7):
        return cls("tversky", alpha=alpha, beta=beta)

    def to_json(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "focal":
            doc["gamma"] = self.gamma
        if self.kind == "tversky":
            doc["alpha"] = self.alpha
            doc["beta"] = self.beta
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "LossKind":
        return cls(**doc)


def _checked(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise LengthMismatch(f"labels {p.shape} vs probabilities {q.shape}")
    return p, np.clip(q, EPS, 1.0 - EPS)


def _overlap_terms(p, q, alpha, beta):
    s = np.sum(p * q)
    t = np.sum(p * q + alpha * ((1.0 - p) * q) + beta * (p * (1.0 - q)))
    return s, t


def loss_eval(kind: LossKind, p, q) -> float:
    p, q = _checked(p, q)
    if kind.kind == "cross_entropy":
        return float(-np.mean(p * np.log(q) + (1.0 - p) * np.log(1.0 - q)))
    if kind.kind == "focal":
        g = kind.gamma
        return float(
            -np.mean(
                p * (1.0 - q) ** g * np.log(q) + (1.0 - p) * q**g * np.log(1.0 - q)
            )
        )
    if kind.kind == "f1":
        s, t = _overlap_terms(p, q, 0.5, 0.5)
    else:
        s, t = _overlap_terms(p, q, kind.alpha, kind.beta)
    if t == 0.0:
        return 1.0
    return float(1.0 - s / t)


def loss_grad(kind: LossKind, p, q) -> np.ndarray:
    """d(loss)/dq, evaluated at the clamped probabilities."""
    p, q = _checked(p, q)
    n = p.shape[0]
    if kind.kind == "cross_entropy":
        return -(p / q - (1.0 - p) / (1.0 - q)) / n
    if kind.kind == "focal":
        g = kind.gamma
        pos = (1.0 - q) ** g / q - g * (1.0 - q) ** (g - 1.0) * np.log(q)
        neg = g * q ** (g - 1.0) * np.log(1.0 - q) - q**g / (1.0 - q)
        return -(p * pos + (1.0 - p) * neg) / n
    if kind.kind == "f1":
        alpha, beta = 0.5, 0.5
    else:
        alpha, beta = kind.alpha, kind.beta
    s, t = _overlap_terms(p, q, alpha, beta)
    if t == 0.0:
        return np.zeros_like(q)
    ds = p
    dt = p + alpha * (1.0 - p) - beta * p
    return -(ds * t - s * dt) / (t * t)
