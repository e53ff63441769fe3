"""Small-oscillation matrices of a charged multi-segment planar pendulum.

Segment k (1-based) has length l_k; point mass m_k with charge Q_k sits at
its lower hinge. The suspension point carries the wall charge Q_0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from vibspec._rng import ROLE_DISORDER, stream
from vibspec.eigensolve import MatrixPair

MAX_SPREAD = 1.0 / math.sqrt(3.0)


@dataclass
class PendulumConfig:
    n: int
    lengths: np.ndarray
    masses: np.ndarray
    charges: np.ndarray
    gravity: float

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        self.charges = np.asarray(self.charges, dtype=float)
        self.gravity = float(self.gravity)
        self.validate()

    def validate(self) -> None:
        n = self.n
        if int(n) != n or n < 1:
            raise ValueError(f"segment count must be a positive integer, got {n!r}")
        if self.lengths.shape != (n,) or self.masses.shape != (n,):
            raise ValueError("lengths and masses must have n entries")
        if self.charges.shape != (n + 1,):
            raise ValueError("charges must have n + 1 entries (index 0 is the wall)")
        if not np.all(self.lengths > 0) or not np.all(self.masses > 0):
            raise ValueError("lengths and masses must be strictly positive")
        if not np.all(self.charges >= 0) or self.gravity < 0:
            raise ValueError("charges and gravity must be non-negative")
        if not np.all(np.isfinite(self.lengths)) or not np.all(np.isfinite(self.masses)):
            raise ValueError("non-finite pendulum parameters")
        coulomb = np.any(self.charges[:-1] > 0) and np.any(self.charges[1:] > 0)
        if self.gravity == 0 and not coulomb:
            raise ValueError("no restoring force: gravity is zero and no charge pair is nonzero")

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "lengths": self.lengths.tolist(),
            "masses": self.masses.tolist(),
            "charges": self.charges.tolist(),
            "gravity": self.gravity,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "PendulumConfig":
        missing = {"n", "lengths", "masses", "charges", "gravity"} - set(data)
        if missing:
            raise ValueError(f"pendulum config missing keys: {sorted(missing)}")
        return cls(int(data["n"]), data["lengths"], data["masses"], data["charges"], data["gravity"])

    @classmethod
    def from_json(cls, text: str) -> "PendulumConfig":
        return cls.from_dict(json.loads(text))


def uniform_config(
    n: int,
    total_length: float = 1.0,
    total_mass: float = 1.0,
    charge_scale: float = 0.0,
    gravity: float = 1.0,
) -> PendulumConfig:
    """Equal segments with charges scaled as charge_scale / (n sqrt(log n)).

    This keeps Coulomb and gravitational energies comparable as n grows.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if charge_scale < 0:
        raise ValueError("charge_scale must be non-negative")
    if charge_scale > 0 and n < 2:
        raise ValueError("charge scaling needs n >= 2 (log n must be positive)")
    q = charge_scale / (n * math.sqrt(math.log(n))) if charge_scale > 0 else 0.0
    return PendulumConfig(
        n=n,
        lengths=np.full(n, total_length / n),
        masses=np.full(n, total_mass / n),
        charges=np.full(n + 1, q),
        gravity=gravity,
    )


def disordered_config(base: PendulumConfig, relative_spread: float, seed: int, index: int = 0) -> PendulumConfig:
    """Draw every length, mass and charge i.i.d. uniform around the base values.

    Each parameter is uniform on mean * [1 - sqrt(3) s, 1 + sqrt(3) s], which
    has mean equal to the base value and standard deviation s * mean.
    """
    s = float(relative_spread)
    if not 0 <= s < MAX_SPREAD:
        raise ValueError(f"relative_spread must lie in [0, 1/sqrt(3)), got {s}")
    if s == 0:
        return PendulumConfig(base.n, base.lengths.copy(), base.masses.copy(), base.charges.copy(), base.gravity)
    rng = stream(seed, index, ROLE_DISORDER)
    half = math.sqrt(3.0) * s

    def draw(mean):
        return mean * (1.0 + half * rng.uniform(-1.0, 1.0, size=mean.shape))

    return PendulumConfig(base.n, draw(base.lengths), draw(base.masses), draw(base.charges), base.gravity)


def coulomb_kernel(config: PendulumConfig) -> np.ndarray:
    """Pair kernel W[k, l] = Q_{k-1} Q_l / (l_k + ... + l_l)^3 for k <= l (0-based k, l)."""
    n = config.n
    q = config.charges
    s = np.concatenate([[0.0], np.cumsum(config.lengths)])
    # span[k, l] = sum of lengths k..l (1-based) = s[l] - s[k-1]
    span = s[1:][None, :] - s[:-1][:, None]
    upper = np.triu(np.ones((n, n), dtype=bool))
    W = np.zeros((n, n))
    W[upper] = (np.outer(q[:-1], q[1:]) / np.where(upper, span, 1.0) ** 3)[upper]
    return W


def coulomb_matrix(config: PendulumConfig) -> np.ndarray:
    """The Coulomb part U of the stiffness matrix. Rows sum to zero."""
    n = config.n
    l = config.lengths
    W = coulomb_kernel(config)
    # S[i, j] = sum_{k <= i} sum_{l >= j} W[k, l]; two cumulative sums keep this O(n^2)
    S = np.cumsum(W, axis=0)
    S = np.cumsum(S[:, ::-1], axis=1)[:, ::-1]
    Ut = np.triu(S, 1)
    Ut = Ut + Ut.T
    Ut *= np.outer(l, l)
    U = -Ut
    U[np.diag_indices(n)] = Ut.sum(axis=1)
    return U


def assemble(config: PendulumConfig) -> MatrixPair:
    """Mass and stiffness matrices for small angular deviations from the vertical."""
    config.validate()
    n = config.n
    l = config.lengths
    tail = np.cumsum(config.masses[::-1])[::-1]  # sum_{k >= i} m_k
    idx = np.arange(n)
    M = np.outer(l, l) * tail[np.maximum.outer(idx, idx)]
    K = np.diag(l * config.gravity * tail)
    if np.any(config.charges[:-1] > 0) and np.any(config.charges[1:] > 0):
        K = K + coulomb_matrix(config)
    return MatrixPair(M, K)
