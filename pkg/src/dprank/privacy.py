"""Differential-privacy arithmetic: gradient-bound constant, minimum depth,
per-iteration Gaussian calibration, noise injection, and the budget ledger."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np


class PrivacyOverdraftError(RuntimeError):
    """Recording past the declared iteration count or budget aborts the run."""


def compute_m(n: int, gamma: float) -> float:
    """Gradient-bound constant

        M = (2(N-1)gamma^2 + 2 gamma + 2 gamma (1-gamma)/N) (1 + 1/gamma),

    the worst-case factor multiplying the product of layer spectral norms in
    the per-edge embedding-gradient bound.
    """
    if n < 2:
        raise ValueError("constant is defined for graphs with at least 2 nodes")
    if not 0.0 < gamma < 1.0:
        raise ValueError("damping factor must lie in (0, 1)")
    return (2.0 * (n - 1) * gamma**2 + 2.0 * gamma
            + 2.0 * gamma * (1.0 - gamma) / n) * (1.0 + 1.0 / gamma)


def min_layers(s_nabla: float, batch_pairs: float, m: float, s: float,
               t: int = 1) -> int:
    """Smallest hidden-layer count L with B * M * T * (1/s)^(L+1) <= S_nabla.

    Equivalently ceil(log_{1/s}(S_nabla / (B M T)) - 1), floored at 1. When the
    ratio already exceeds 1 the bound holds at any depth and 1 is returned.
    """
    if min(s_nabla, batch_pairs, m) <= 0 or t < 1:
        raise ValueError("all inputs must be positive")
    if s <= 1.0:
        raise ValueError("normalization scale s must exceed 1")
    bmt = batch_pairs * m * t
    ratio = s_nabla / bmt
    if ratio >= 1.0:
        return 1
    depth = max(1, math.ceil(math.log(ratio) / math.log(1.0 / s) - 1.0))
    # guard the ceil against floating-point edges: enforce tight minimality
    while bmt * (1.0 / s) ** (depth + 1) > s_nabla:
        depth += 1
    while depth > 1 and bmt * (1.0 / s) ** depth <= s_nabla:
        depth -= 1
    return depth


def noise_sigma(epsilon: float, delta: float, t: int = 1) -> float:
    """Per-iteration Gaussian multiplier under even budget splitting:

        sigma = sqrt(2 ln(1.25 / (delta/T))) / (epsilon/T).

    Natural logarithm. Warns when epsilon/T >= 1, where the classical Gaussian
    mechanism calibration is outside its usual validity regime; the value is
    still the verbatim formula.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if t < 1:
        raise ValueError("iteration count must be >= 1")
    if epsilon / t >= 1.0:
        warnings.warn(
            f"per-iteration budget epsilon/T = {epsilon / t:.4g} >= 1; the "
            "Gaussian mechanism guarantee is usually stated for budgets below 1",
            RuntimeWarning, stacklevel=2)
    return math.sqrt(2.0 * math.log(1.25 * t / delta)) / (epsilon / t)


def perturb_gradient(sum_grad_v: np.ndarray, s_nabla: float, sigma: float,
                     batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian mechanism on the summed embedding gradient.

    Adds i.i.d. zero-mean noise with standard deviation ``s_nabla * sigma`` to
    every entry of the full matrix (rows untouched by the batch included:
    which rows a batch touches is data-dependent, so sparing them would leak
    participation), then divides by the nominal batch pair count.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    noise = rng.normal(0.0, s_nabla * sigma, size=sum_grad_v.shape)
    return (sum_grad_v + noise) / batch_size


@dataclass(frozen=True)
class PrivacySpec:
    """Everything needed to audit a run's privacy arithmetic.

    Derived quantities (sigma, the gradient-bound constant, the minimum layer
    count) are stored alongside the declared budget so a serialized spec is
    self-describing.
    """

    epsilon: float
    delta: float
    s: float
    s_nabla: float
    t: int
    sigma: float
    m_const: float
    min_depth: int
    batch_pairs: int

    def __post_init__(self):
        if self.epsilon <= 0 or not 0 < self.delta < 1:
            raise ValueError("invalid privacy budget")
        if self.s <= 1 or self.s_nabla <= 0 or self.t < 1:
            raise ValueError("invalid sensitivity parameters")

    @classmethod
    def derive(cls, epsilon: float, delta: float, s: float, s_nabla: float,
               t: int, num_nodes: int, gamma: float,
               batch_pairs: int) -> "PrivacySpec":
        m = compute_m(num_nodes, gamma)
        return cls(epsilon=epsilon, delta=delta, s=s, s_nabla=s_nabla, t=t,
                   sigma=noise_sigma(epsilon, delta, t),
                   m_const=m,
                   min_depth=min_layers(s_nabla, batch_pairs, m, s, t),
                   batch_pairs=batch_pairs)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PrivacyLedger:
    """Sequential-composition audit record.

    Exactly ``t`` entries may be recorded; totals may never exceed the declared
    (epsilon, delta). Overdrafts raise and are meant to abort the run.
    """

    epsilon: float
    delta: float
    t: int
    entries: list = field(default_factory=list)

    def record(self, eps_t: float, delta_t: float) -> None:
        if len(self.entries) >= self.t:
            raise PrivacyOverdraftError(
                f"iteration {len(self.entries) + 1} exceeds the declared T={self.t}")
        eps_after = math.fsum(e for e, _ in self.entries) + eps_t
        delta_after = math.fsum(d for _, d in self.entries) + delta_t
        if eps_after > self.epsilon * (1 + 1e-12) + 1e-300:
            raise PrivacyOverdraftError(
                f"epsilon overdraft: {eps_after} > {self.epsilon}")
        if delta_after > self.delta * (1 + 1e-12) + 1e-300:
            raise PrivacyOverdraftError(
                f"delta overdraft: {delta_after} > {self.delta}")
        self.entries.append((eps_t, delta_t))

    def spent(self) -> tuple:
        return (math.fsum(e for e, _ in self.entries),
                math.fsum(d for _, d in self.entries))

    def verify(self) -> tuple:
        """Check T entries recorded and totals equal to the declared budget
        within 1e-12 relative; returns the validated totals."""
        if len(self.entries) != self.t:
            raise ValueError(
                f"ledger holds {len(self.entries)} entries, expected T={self.t}")
        eps_total, delta_total = self.spent()
        if abs(eps_total - self.epsilon) > 1e-12 * self.epsilon:
            raise ValueError(
                f"epsilon total {eps_total} does not match declared {self.epsilon}")
        if abs(delta_total - self.delta) > 1e-12 * self.delta:
            raise ValueError(
                f"delta total {delta_total} does not match declared {self.delta}")
        return eps_total, delta_total

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta, "t": self.t,
                "entries": [list(e) for e in self.entries]}

    @classmethod
    def from_dict(cls, payload: dict) -> "PrivacyLedger":
        ledger = cls(epsilon=payload["epsilon"], delta=payload["delta"],
                     t=payload["t"])
        ledger.entries = [tuple(e) for e in payload["entries"]]
        return ledger
