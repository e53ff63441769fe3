"""Monte Carlo ensemble driver and density-estimate tooling.

Per-sample work runs with single-threaded BLAS and is aggregated in sample
index order (or as integer counts), so results are bitwise independent of the
number of workers.
"""

from __future__ import annotations

import concurrent.futures as cf
import io
import json
import multiprocessing
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats as sps
from threadpoolctl import threadpool_limits

from vibspec.eigensolve import EigenError, ParticipationCurve, bin_participation, generalized_eigen
from vibspec.ensemble import ModelParams, sample_pair
from vibspec.pendulum import PendulumConfig, assemble, disordered_config

DEFAULT_BINS = 200
DEFAULT_HEADROOM = 1.05
BULK = (0.05, 0.95)


class InsufficientData(ValueError):
    pass


class EmptyOverlap(ValueError):
    pass


class SampleFailure(EigenError):
    """An eigensolve failed inside the ensemble; carries the sample index."""

    def __init__(self, index: int, message: str):
        super().__init__(index, message)
        self.sample_index = index

    def __str__(self):
        return f"sample {self.args[0]}: {self.args[1]}"


# -- sources ----------------------------------------------------------------

@dataclass(frozen=True)
class RandomModel:
    params: ModelParams

    def pair(self, seed: int, index: int):
        return sample_pair(self.params, seed, index)

    def describe(self) -> dict:
        return {"kind": "random_model", "params": self.params.to_dict()}


@dataclass(frozen=True)
class Pendulum:
    """Uniform or disordered pendulum; eigenvalues optionally divided by N^2."""

    config: PendulumConfig
    relative_spread: float = 0.0
    scale_by_n2: bool = False

    def pair(self, seed: int, index: int):
        cfg = self.config
        if self.relative_spread > 0:
            cfg = disordered_config(cfg, self.relative_spread, seed, index)
        return assemble(cfg)

    @property
    def eigen_scale(self) -> float:
        return 1.0 / self.config.n**2 if self.scale_by_n2 else 1.0

    def describe(self) -> dict:
        return {
            "kind": "pendulum",
            "config": self.config.to_dict(),
            "relative_spread": self.relative_spread,
            "scale_by_n2": self.scale_by_n2,
        }


Source = Union[RandomModel, Pendulum]


# -- density estimate -------------------------------------------------------

@dataclass
class DensityEstimate:
    """Normalized histogram of eigenvalues.

    Heights are counts / (total_eigenvalues * width), so they estimate the
    true density even when the edges cover only part of the spectrum.
    """

    bin_edges: np.ndarray
    heights: np.ndarray
    total_eigenvalues: int
    samples: int
    counts: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, edges, counts, total: int, samples: int, metadata=None) -> "DensityEstimate":
        edges = np.asarray(edges, dtype=float)
        counts = np.asarray(counts, dtype=np.int64)
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        heights = counts / (total * np.diff(edges))
        return cls(edges, heights, int(total), int(samples), counts, dict(metadata or {}))

    @classmethod
    def from_values(cls, values, bins=DEFAULT_BINS, samples: int = 1, metadata=None) -> "DensityEstimate":
        values = np.asarray(values, dtype=float)
        edges = resolve_edges(bins, values)
        return cls.from_counts(edges, histogram_counts(values, edges), values.size, samples, metadata)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def support(self) -> tuple[float, float]:
        return float(self.bin_edges[0]), float(self.bin_edges[-1])

    def mass(self) -> float:
        return float(np.sum(self.heights * self.widths))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.bin_edges, x, side="right") - 1
        inside = (i >= 0) & (i < self.heights.size)
        out = np.zeros_like(x)
        out[inside] = self.heights[i[inside]]
        return out

    def cdf(self, x):
        cum = np.concatenate([[0.0], np.cumsum(self.heights * self.widths)])
        return np.interp(x, self.bin_edges, cum, left=0.0, right=cum[-1])

    def ppf(self, q: float) -> float:
        cum = np.concatenate([[0.0], np.cumsum(self.heights * self.widths)])
        cum = cum / cum[-1]
        j = int(np.searchsorted(cum, q, side="left"))
        j = min(max(j, 1), cum.size - 1)
        a, b = cum[j - 1], cum[j]
        frac = 0.0 if b == a else (q - a) / (b - a)
        return float(self.bin_edges[j - 1] + frac * (self.bin_edges[j] - self.bin_edges[j - 1]))

    def merge(self, other: "DensityEstimate") -> "DensityEstimate":
        """Pool two estimates with identical edges (exact, via integer counts)."""
        if self.counts is None or other.counts is None:
            raise ValueError("merging needs integer counts")
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise ValueError("cannot merge estimates with different bin edges")
        return DensityEstimate.from_counts(
            self.bin_edges,
            self.counts + other.counts,
            self.total_eigenvalues + other.total_eigenvalues,
            self.samples + other.samples,
            self.metadata,
        )

    def to_csv(self, extra: Optional[dict] = None) -> str:
        """CSV with a '# key=json' provenance header; ``extra`` adds per-bin columns."""
        extra = extra or {}
        buf = io.StringIO()
        for line in _provenance_lines(self.metadata, self.samples, self.total_eigenvalues):
            buf.write(f"# {line}\n")
        buf.write(",".join(["bin_left", "bin_right", "height", *extra]) + "\n")
        cols = [self.bin_edges[:-1], self.bin_edges[1:], self.heights, *extra.values()]
        for row in zip(*cols):
            buf.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        data = {
            "metadata": self.metadata,
            "samples": self.samples,
            "total_eigenvalues": self.total_eigenvalues,
            "bin_edges": [float(v) for v in self.bin_edges],
            "heights": [float(v) for v in self.heights],
        }
        if self.counts is not None:
            data["counts"] = [int(v) for v in self.counts]
        return json.dumps(data, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DensityEstimate":
        d = json.loads(text)
        counts = np.asarray(d["counts"], dtype=np.int64) if "counts" in d else None
        return cls(
            np.asarray(d["bin_edges"], dtype=float),
            np.asarray(d["heights"], dtype=float),
            int(d["total_eigenvalues"]),
            int(d["samples"]),
            counts,
            d.get("metadata", {}),
        )

    @classmethod
    def from_csv(cls, text: str) -> "DensityEstimate":
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                try:
                    meta[key.strip()] = json.loads(val)
                except json.JSONDecodeError:
                    meta[key.strip()] = val.strip()
            elif line and not line.startswith("bin_left"):
                rows.append([float(v) for v in line.split(",")])
        arr = np.asarray(rows)
        if arr.ndim != 2 or arr.shape[1] < 3:
            raise ValueError("density CSV needs bin_left, bin_right, height columns")
        edges = np.concatenate([arr[:, 0], arr[-1:, 1]])
        total = int(meta.pop("total_eigenvalues", 0) or 0)
        samples = int(meta.pop("samples", 1) or 1)
        return cls(edges, arr[:, 2], total, samples, None, meta)


def _provenance_lines(metadata: dict, samples: int, total: int) -> list[str]:
    lines = [f"{k}={json.dumps(v, sort_keys=True)}" for k, v in sorted(metadata.items())]
    lines += [f"samples={samples}", f"total_eigenvalues={total}"]
    return lines


def resolve_edges(bins, values: Optional[np.ndarray] = None) -> np.ndarray:
    """Bin count -> equal-width edges over [0, 1.05 max]; arrays pass through."""
    if np.isscalar(bins):
        if values is None or values.size == 0:
            raise ValueError("bin count needs data to set the range")
        hi = DEFAULT_HEADROOM * float(np.max(values))
        return np.linspace(0.0, hi, int(bins) + 1)
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be a strictly increasing 1-d array")
    return edges


def histogram_counts(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(values, bins=edges)
    return counts.astype(np.int64)


def tabulate(reference, edges) -> DensityEstimate:
    """Bin averages of a continuous reference, (F(b) - F(a)) / (b - a)."""
    edges = np.asarray(edges, dtype=float)
    F = np.asarray(reference.cdf(edges), dtype=float)
    heights = np.diff(F) / np.diff(edges)
    return DensityEstimate(edges, heights, 0, 0, None, {"source": "tabulated"})


# -- ensemble driver --------------------------------------------------------

@dataclass
class EnsembleResult:
    density: DensityEstimate
    participation: Optional[ParticipationCurve] = None
    eigenvalues: Optional[np.ndarray] = None


def _solve_range(source: Source, seed: int, indices: Sequence[int], want_vectors: bool, edges):
    scale = getattr(source, "eigen_scale", 1.0)
    vals, ps = [], []
    with threadpool_limits(limits=1):
        for i in indices:
            try:
                spec = generalized_eigen(source.pair(seed, i), want_vectors=want_vectors)
            except EigenError as exc:
                raise SampleFailure(int(i), str(exc)) from None
            vals.append(spec.eigenvalues * scale)
            if want_vectors:
                ps.append(spec.participation())
    if edges is not None and not want_vectors:
        return histogram_counts(np.concatenate(vals), edges), None
    return np.concatenate(vals), (np.concatenate(ps) if want_vectors else None)


def _worker_count(workers) -> int:
    if workers in (None, "auto"):
        return max(1, os.cpu_count() or 1)
    w = int(workers)
    if w < 1:
        raise ValueError("workers must be >= 1 or 'auto'")
    return w


def run_ensemble(
    source: Source,
    samples: int,
    seed: int,
    bins=DEFAULT_BINS,
    want_vectors: bool = False,
    workers=1,
    pbins=20,
    chunk: int = 8,
    keep_eigenvalues: bool = False,
) -> EnsembleResult:
    """Diagonalize ``samples`` independent realizations and histogram the spectra.

    ``bins`` is a bin count (range set from the data) or explicit edges; with
    explicit edges and no eigenvectors only integer counts travel between
    processes.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    nw = _worker_count(workers)
    edges = None if np.isscalar(bins) else resolve_edges(bins)
    counting = edges is not None and not want_vectors and not keep_eigenvalues
    chunk = max(1, min(chunk, -(-samples // nw)))
    chunks = [range(a, min(a + chunk, samples)) for a in range(0, samples, chunk)]
    args = [(source, seed, list(c), want_vectors, edges if counting else None) for c in chunks]

    if nw == 1:
        parts = [_solve_range(*a) for a in args]
    else:
        ctx = multiprocessing.get_context("spawn")
        with cf.ProcessPoolExecutor(max_workers=nw, mp_context=ctx) as pool:
            parts = list(pool.map(_solve_range, *zip(*args)))

    meta = {"source": source.describe(), "seed": int(seed)}
    if counting:
        counts = np.sum([p[0] for p in parts], axis=0)
        n_total = samples * _matrix_size(source)
        est = DensityEstimate.from_counts(edges, counts, n_total, samples, meta)
        return EnsembleResult(est)

    w = np.concatenate([p[0] for p in parts])
    meta["max_eigenvalue"] = float(np.max(w))
    est_edges = resolve_edges(bins, w)
    est = DensityEstimate.from_counts(est_edges, histogram_counts(w, est_edges), w.size, samples, meta)
    curve = None
    if want_vectors:
        curve = bin_participation(w, np.concatenate([p[1] for p in parts]), pbins)
    return EnsembleResult(est, curve, w if keep_eigenvalues else None)


def _matrix_size(source: Source) -> int:
    return source.params.n if isinstance(source, RandomModel) else source.config.n


def edge_scale(eigenvalues: np.ndarray, target_edge: float) -> float:
    """Factor mapping the largest eigenvalue onto a reference band edge."""
    return float(target_edge / np.max(eigenvalues))


# -- transforms and fits ----------------------------------------------------

def transform_to_frequency(est: DensityEstimate) -> DensityEstimate:
    """Density over w from density over w^2, bin by bin: edges -> sqrt(edges), mass kept."""
    if est.bin_edges[0] < 0:
        raise ValueError("w^2 axis must be non-negative")
    edges = np.sqrt(est.bin_edges)
    mass = est.heights * est.widths
    meta = dict(est.metadata, axis="omega")
    return DensityEstimate(edges, mass / np.diff(edges), est.total_eigenvalues, est.samples, est.counts, meta)


@dataclass
class ScalingFit:
    coefficient: float
    exponent: float
    exponent_stderr: float
    window: tuple[float, float]
    points: int

    @property
    def spectral_dimension(self) -> float:
        return 2.0 * (self.exponent + 1.0)


def fit_low_frequency(source, window: tuple[float, float], points: int = 64) -> ScalingFit:
    """Least-squares fit of log rho = log c + exponent * log x over a window.

    For a DensityEstimate the bin centers (with nonzero height) inside the
    window are used; for a continuous density (anything with ``pdf``) a
    log-spaced grid of ``points`` abscissae.
    """
    lo, hi = window
    if not 0 < lo < hi:
        raise ValueError("window must satisfy 0 < lo < hi")
    if isinstance(source, DensityEstimate):
        x = source.centers
        y = source.heights
        keep = (x >= lo) & (x <= hi) & (y > 0)
        x, y = x[keep], y[keep]
    else:
        x = np.geomspace(lo, hi, points)
        y = np.asarray(source.pdf(x) if hasattr(source, "pdf") else source(x), dtype=float)
        keep = y > 0
        x, y = x[keep], y[keep]
    if x.size < 5:
        raise InsufficientData(f"only {x.size} usable points in window {window}")
    r = sps.linregress(np.log(x), np.log(y))
    return ScalingFit(float(np.exp(r.intercept)), float(r.slope), float(r.stderr), (lo, hi), int(x.size))


# -- comparison -------------------------------------------------------------

def compare(est: DensityEstimate, reference, bulk=BULK) -> dict:
    """Distances between an estimate and a reference (continuous law or estimate).

    ks       sup |F_est - F_ref| over the overlap of supports
    ks_bulk  the same, restricted to the reference's [5%, 95%] quantile window
    sup_bulk max |h - ref bin average| over bulk bins, relative to the largest
             reference bin average there
    """
    lo = max(est.support[0], reference.support[0])
    hi = min(est.support[1], reference.support[1])
    if not lo < hi:
        raise EmptyOverlap(f"supports {est.support} and {reference.support} do not overlap")
    qlo, qhi = reference.ppf(bulk[0]), reference.ppf(bulk[1])

    grid = est.bin_edges
    if isinstance(reference, DensityEstimate):
        grid = np.union1d(grid, reference.bin_edges)
    grid = grid[(grid >= lo) & (grid <= hi)]
    F1 = np.asarray(est.cdf(grid), dtype=float)
    F2 = np.asarray(reference.cdf(grid), dtype=float)
    diff = np.abs(F1 - F2)
    in_bulk = (grid >= qlo) & (grid <= qhi)

    edges = est.bin_edges
    centers = est.centers
    Fr = np.asarray(reference.cdf(edges), dtype=float)
    ref_avg = np.diff(Fr) / np.diff(edges)
    resid = est.heights - ref_avg
    bulk_bins = (centers >= qlo) & (centers <= qhi) & (edges[:-1] >= lo) & (edges[1:] <= hi)
    peak = float(np.max(ref_avg[bulk_bins])) if np.any(bulk_bins) else np.nan
    sup_bulk = float(np.max(np.abs(resid[bulk_bins])) / peak) if np.any(bulk_bins) else np.nan
    return {
        "ks": float(np.max(diff)),
        "ks_bulk": float(np.max(diff[in_bulk])) if np.any(in_bulk) else float("nan"),
        "sup_bulk": sup_bulk,
        "bulk": [float(qlo), float(qhi)],
        "overlap": [float(lo), float(hi)],
        "residuals": [
            {"center": float(c), "estimate": float(h), "reference": float(r), "residual": float(d)}
            for c, h, r, d in zip(centers, est.heights, ref_avg, resid)
        ],
    }
