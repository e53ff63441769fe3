"""Wishart-pair random matrix model: K = C1^H C1, M = C2^H C2 + m0 I."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from vibspec._rng import ROLE_MASS, ROLE_STIFFNESS, stream
from vibspec.eigensolve import MatrixPair


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


@dataclass(frozen=True)
class ModelParams:
    n: int
    m0: float
    sigma_m: float = 1.0
    sigma_k: float = 1.0
    field: Field = Field.COMPLEX

    def __post_init__(self):
        object.__setattr__(self, "field", Field(self.field))
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        for name in ("m0", "sigma_m", "sigma_k"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    @property
    def mu(self) -> float:
        return self.m0 / self.sigma_m**2

    @property
    def omega0_sq(self) -> float:
        return self.sigma_k**2 / self.sigma_m**2

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "m0": self.m0,
            "sigma_m": self.sigma_m,
            "sigma_k": self.sigma_k,
            "field": self.field.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        if "n" not in data or "m0" not in data:
            raise ValueError("model params need at least 'n' and 'm0'")
        return cls(
            n=int(data["n"]),
            m0=float(data["m0"]),
            sigma_m=float(data.get("sigma_m", 1.0)),
            sigma_k=float(data.get("sigma_k", 1.0)),
            field=Field(data.get("field", "complex")),
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


@dataclass
class GinibreSample:
    entries: np.ndarray
    sigma: float
    seed_info: tuple


def scaled_params(params: ModelParams) -> tuple[float, float]:
    """Dimensionless shift mu = m0 / sigma_M^2 and unit omega0^2 = sigma_K^2 / sigma_M^2."""
    return params.mu, params.omega0_sq


def sample_ginibre(
    n: int,
    sigma: float,
    field: Field | str,
    seed: int,
    index: int,
    role: int = ROLE_STIFFNESS,
) -> GinibreSample:
    """Gaussian n x n matrix with E|C_ij|^2 = sigma^2 / n.

    In the complex field the real and imaginary parts each carry variance
    sigma^2 / (2n), so the eigenvalues fill the disk of radius sigma.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = stream(seed, index, role)
    if Field(field) is Field.COMPLEX:
        scale = sigma / np.sqrt(2.0 * n)
        C = np.empty((n, n), dtype=complex)
        C.real = rng.standard_normal((n, n))
        C.imag = rng.standard_normal((n, n))
        C *= scale
    else:
        C = rng.standard_normal((n, n)) * (sigma / np.sqrt(n))
    return GinibreSample(C, sigma, (seed, index, role))


def gram(C: np.ndarray) -> np.ndarray:
    """C^H C via a rank-k update; the result is exactly Hermitian."""
    C = np.asfortranarray(C)
    if np.iscomplexobj(C):
        G = sla.blas.zherk(1.0, C, trans=2, lower=0)
    else:
        G = sla.blas.dsyrk(1.0, C, trans=1, lower=0)
    upper = np.triu(G, 1)
    G = np.triu(G) + upper.conj().T
    if np.iscomplexobj(G):
        G[np.diag_indices_from(G)] = G.diagonal().real
    return G


def sample_pair(params: ModelParams, seed: int, index: int) -> MatrixPair:
    """One (M, K) realization; C1 and C2 come from independent streams."""
    n = params.n
    C1 = sample_ginibre(n, params.sigma_k, params.field, seed, index, ROLE_STIFFNESS).entries
    C2 = sample_ginibre(n, params.sigma_m, params.field, seed, index, ROLE_MASS).entries
    K = gram(C1)
    M = gram(C2)
    M[np.diag_indices(n)] += params.m0
    return MatrixPair(M, K)
