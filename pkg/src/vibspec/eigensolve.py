"""Generalized Hermitian-definite eigenproblem K A = w^2 M A.

The spectrum of the quasi-hermitian H = M^-1 K is obtained by Cholesky
reduction of M to a standard Hermitian problem, so H is never formed
explicitly.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

CLAMP_FACTOR = 1e3

_MAGIC = b"VSPC"
_FLAG_VECTORS = 1
_FLAG_COMPLEX = 2


class EigenError(RuntimeError):
    """Base class for eigensolver failures."""


class CholeskyFailure(EigenError):
    """The mass matrix is not numerically positive definite."""


class NegativeEigenvalue(EigenError):
    """An eigenvalue is negative beyond the clamp tolerance."""


class MissingVectors(ValueError):
    """A spectrum without eigenvectors was passed where vectors are needed."""


@dataclass
class MatrixPair:
    """Mass matrix M and stiffness matrix K of one realization."""

    mass: np.ndarray
    stiffness: np.ndarray

    @property
    def n(self) -> int:
        return self.mass.shape[0]

    def hamiltonian(self) -> np.ndarray:
        """Explicit H = M^-1 K. Only for small brute-force checks."""
        return np.linalg.solve(self.mass, self.stiffness)


@dataclass
class Spectrum:
    """Sorted eigenvalues w^2 and optional unit-norm eigenvector columns of H."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def participation(self) -> np.ndarray:
        """Per-mode 1 / (N sum_l |A_l|^4)."""
        if self.eigenvectors is None:
            raise MissingVectors("spectrum was computed without eigenvectors")
        a2 = np.abs(self.eigenvectors) ** 2
        return 1.0 / (self.n * np.sum(a2 * a2, axis=0))

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "eigenvalues": [float(v) for v in self.eigenvalues]})

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        data = json.loads(text)
        return cls(np.asarray(data["eigenvalues"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("eigenvalue\n")
        for v in self.eigenvalues:
            buf.write(f"{float(v):.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        return cls(np.asarray([float(v) for v in lines[1:]], dtype=float))

    def to_bytes(self, include_vectors: bool = False) -> bytes:
        """Binary dump: 'VSPC', uint64 n, uint32 flags, then little-endian float64 data.

        Eigenvectors (if included) follow the eigenvalues in row-major order;
        complex vectors are stored as interleaved (re, im) pairs.
        """
        flags = 0
        payload = [np.ascontiguousarray(self.eigenvalues, dtype="<f8").tobytes()]
        if include_vectors:
            if self.eigenvectors is None:
                raise MissingVectors("no eigenvectors to serialize")
            flags |= _FLAG_VECTORS
            vec = np.ascontiguousarray(self.eigenvectors)
            if np.iscomplexobj(vec):
                flags |= _FLAG_COMPLEX
                vec = vec.astype("<c16").view("<f8")
            payload.append(np.ascontiguousarray(vec, dtype="<f8").tobytes())
        return _MAGIC + struct.pack("<QI", self.n, flags) + b"".join(payload)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Spectrum":
        if blob[:4] != _MAGIC:
            raise ValueError("not a VSPC spectrum dump")
        n, flags = struct.unpack_from("<QI", blob, 4)
        off = 4 + struct.calcsize("<QI")
        vals = np.frombuffer(blob, dtype="<f8", count=n, offset=off).astype(float)
        vecs = None
        if flags & _FLAG_VECTORS:
            off += 8 * n
            if flags & _FLAG_COMPLEX:
                raw = np.frombuffer(blob, dtype="<f8", count=2 * n * n, offset=off)
                vecs = raw.view("<c16").reshape(n, n).astype(complex)
            else:
                vecs = np.frombuffer(blob, dtype="<f8", count=n * n, offset=off).reshape(n, n).astype(float)
        return cls(vals, vecs)


@dataclass
class ParticipationCurve:
    """Participation ratio averaged within w^2 bins across an ensemble."""

    bin_edges: np.ndarray
    p: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray

    @property
    def omega_sq(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.omega_sq, self.p])

    def mean(self) -> float:
        """Mode-weighted average over all bins."""
        ok = self.counts > 0
        return float(np.sum(self.p[ok] * self.counts[ok]) / np.sum(self.counts[ok]))


def generalized_eigen(pair: MatrixPair, want_vectors: bool = False) -> Spectrum:
    """Solve K A = w^2 M A for Hermitian K and Hermitian positive definite M.

    LAPACK's generalized driver does the Cholesky reduction M = L L^H and the
    standard Hermitian solve of L^-1 K L^-H. Eigenvectors come back
    M-orthonormal and are rescaled here to unit Euclidean norm.
    """
    M = np.asarray(pair.mass)
    K = np.asarray(pair.stiffness)
    try:
        if want_vectors:
            w, A = sla.eigh(K, M, driver="gvd", check_finite=False)
        else:
            w = sla.eigh(K, M, eigvals_only=True, driver="gv", check_finite=False)
    except sla.LinAlgError as exc:
        raise CholeskyFailure(str(exc)) from None
    w = _clamp(w)
    if not want_vectors:
        return Spectrum(w)
    A /= np.linalg.norm(A, axis=0)
    return Spectrum(w, A)


def _clamp(w: np.ndarray) -> np.ndarray:
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    tol = CLAMP_FACTOR * np.finfo(float).eps * scale
    if w[0] < -tol:
        raise NegativeEigenvalue(f"eigenvalue {w[0]:.3e} below -{tol:.3e}")
    return np.where(w < 0, 0.0, w)


def residuals(pair: MatrixPair, spec: Spectrum) -> np.ndarray:
    """Per-column ||K A - w^2 M A|| / (||K|| + w^2 ||M||)."""
    if spec.eigenvectors is None:
        raise MissingVectors("residuals need eigenvectors")
    A = spec.eigenvectors
    w = spec.eigenvalues
    R = pair.stiffness @ A - (pair.mass @ A) * w
    nk = np.linalg.norm(pair.stiffness, 2)
    nm = np.linalg.norm(pair.mass, 2)
    return np.linalg.norm(R, axis=0) / (nk + w * nm)


def participation_ratio(
    spectra: Iterable[Spectrum],
    bins: int | Sequence[float] = 20,
) -> ParticipationCurve:
    """Bin per-mode participation ratios by w^2 and average across the ensemble.

    ``bins`` is either a bin count (equal width over [0, max eigenvalue]) or
    explicit increasing edges.
    """
    w_all = []
    p_all = []
    for s in spectra:
        p_all.append(s.participation())
        w_all.append(s.eigenvalues)
    if not w_all:
        raise ValueError("empty ensemble")
    return bin_participation(np.concatenate(w_all), np.concatenate(p_all), bins)


def bin_participation(w: np.ndarray, p: np.ndarray, bins: int | Sequence[float] = 20) -> ParticipationCurve:
    if np.isscalar(bins):
        edges = np.linspace(0.0, float(np.max(w)), int(bins) + 1)
        edges[-1] = np.nextafter(edges[-1], np.inf)
    else:
        edges = np.asarray(bins, dtype=float)
    idx = np.searchsorted(edges, w, side="right") - 1
    keep = (idx >= 0) & (idx < len(edges) - 1)
    idx, pk = idx[keep], p[keep]
    nb = len(edges) - 1
    counts = np.bincount(idx, minlength=nb)
    s1 = np.bincount(idx, weights=pk, minlength=nb)
    s2 = np.bincount(idx, weights=pk * pk, minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / counts
        var = np.maximum(s2 / counts - mean**2, 0.0)
        stderr = np.sqrt(var / np.maximum(counts - 1, 1))
    return ParticipationCurve(edges, mean, stderr, counts)
