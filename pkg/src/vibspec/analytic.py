"""Large-N spectral density of H = M^-1 K for the Wishart-pair model.

Everything here works in scaled variables: zeta = z / omega0^2, x = Re zeta
and mu = m0 / sigma_M^2. The resolvent Gamma(zeta, mu) solves

    (zeta + zeta^2) G^3 - [(2 + mu) zeta + mu zeta^2] G^2
        + (1 + mu + 2 mu zeta) G - mu = 0

on the branch with G ~ 1/zeta at infinity. The density is supported on
(0, x1(mu)), diverges like 1/sqrt(x) at the origin and vanishes like
sqrt(x1 - x) at the upper edge.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

CBRT2 = 2.0 ** (1.0 / 3.0)
NORM_TOL = 1e-8
GL_ORDER = 96
HARD_EDGE_CUTOFF = 1e-28


class BranchAmbiguity(RuntimeError):
    """No cubic root could be identified unambiguously as the physical branch."""


class DomainError(ValueError):
    """Input outside the domain of an analytic formula."""


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


# -- cubic ------------------------------------------------------------------

def cubic_coefficients(zeta, mu: float) -> np.ndarray:
    """Coefficients [a3, a2, a1, a0] of the resolvent cubic, shape (..., 4)."""
    z = np.asarray(zeta, dtype=complex)
    return np.stack(
        [z + z * z, -((2.0 + mu) * z + mu * z * z), 1.0 + mu + 2.0 * mu * z, np.full_like(z, -mu)],
        axis=-1,
    )


def cubic_residual(gamma, zeta, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """|P(Gamma)| and the scale sum_k |a_k| |Gamma|^k it should be compared to."""
    c = cubic_coefficients(zeta, mu)
    g = np.asarray(gamma, dtype=complex)
    val = ((c[..., 0] * g + c[..., 1]) * g + c[..., 2]) * g + c[..., 3]
    ag = np.abs(g)
    scale = ((np.abs(c[..., 0]) * ag + np.abs(c[..., 1])) * ag + np.abs(c[..., 2])) * ag + np.abs(c[..., 3])
    return np.abs(val), scale


def cubic_roots(zeta, mu: float) -> np.ndarray:
    """All three roots for each zeta, shape (n, 3), Newton-polished."""
    z = np.atleast_1d(np.asarray(zeta, dtype=complex)).ravel()
    c = cubic_coefficients(z, mu)
    if np.any(np.abs(c[:, 0]) == 0):
        raise DomainError("leading coefficient vanishes (zeta = 0 or zeta = -1)")
    b = c[:, 1:] / c[:, :1]
    comp = np.zeros((z.size, 3, 3), dtype=complex)
    comp[:, 0, :] = -b
    comp[:, 1, 0] = 1.0
    comp[:, 2, 1] = 1.0
    r = np.linalg.eigvals(comp)
    for _ in range(2):
        p = ((c[:, :1] * r + c[:, 1:2]) * r + c[:, 2:3]) * r + c[:, 3:4]
        dp = (3.0 * c[:, :1] * r + 2.0 * c[:, 1:2]) * r + c[:, 2:3]
        step = np.where(dp != 0, p / np.where(dp != 0, dp, 1.0), 0.0)
        r = r - step
    return r


# -- band edge --------------------------------------------------------------

def discriminant(x, mu: float):
    """Discriminant of the resolvent cubic on the real axis; negative exactly inside the band."""
    x = np.asarray(x, dtype=float)
    m = float(mu)
    poly = (
        (m + 4.0) * m**3 * x**3
        + 2.0 * m**2 * (m**2 + 2.0 * m - 6.0) * x**2
        + (m**3 - 4.0 * m**2 - 20.0 * m + 12.0) * m * x
        - 4.0 * (m**3 + 3.0 * m**2 + 3.0 * m + 1.0)
    )
    return x * poly


def upper_edge(mu: float) -> float:
    """Closed-form nonzero root x1 of the discriminant (upper band edge in x units)."""
    m = float(mu)
    if not m > 0:
        raise DomainError(f"mu must be positive, got {mu!r}")
    xi1 = 2.0 * m**7 * (m**5 + 24.0 * m**4 + 264.0 * m**3 + 1574.0 * m**2 + 4806.0 * m + 5832.0)
    d1 = 432.0 * m**14 * (m + 4.0) ** 2 * (m**2 + 10.0 * m + 27.0) ** 3
    sd = np.sqrt(d1)
    num = -2.0 * m**2 * (m**2 + 2.0 * m - 6.0) + (np.cbrt(xi1 + sd) + np.cbrt(xi1 - sd)) / CBRT2
    return float(num / (3.0 * m**3 * (m + 4.0)))


def upper_edge_bisect(mu: float) -> float:
    """Independent check of x1: bisect the sign change of the discriminant to machine resolution."""
    hi = 1.0
    while discriminant(hi, mu) < 0:
        hi *= 2.0
    # the discriminant is negative just above zero, so halving finds the inside
    lo = hi
    while discriminant(lo, mu) >= 0:
        lo *= 0.5
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return float(hi if abs(discriminant(hi, mu)) < abs(discriminant(lo, mu)) else lo)
        if discriminant(mid, mu) < 0:
            lo = mid
        else:
            hi = mid


# -- closed-form density ----------------------------------------------------

def _closed_form(x: np.ndarray, mu: float) -> np.ndarray:
    m = mu
    xi = -x**2 * (
        2.0 * m**3 * x**4
        + 6.0 * m**2 * (m - 1.0) * x**3
        + 3.0 * m * (2.0 * m**2 - 7.0 * m + 2.0) * x**2
        + 2.0 * (m**3 - 12.0 * m**2 + 3.0 * m - 1.0) * x
        - 9.0 * (m**2 + 2.0)
    )
    delta = x * (x + 1.0) * np.sqrt(np.maximum(-27.0 * discriminant(x, m), 0.0))
    chi = m**2 * x**4 + 2.0 * m * (m - 1.0) * x**3 + (m**2 - 5.0 * m + 1.0) * x**2 - 3.0 * (m + 1.0) * x
    # principal complex cube root
    root = np.power((xi + delta).astype(complex), 1.0 / 3.0)
    val = (root / CBRT2 - CBRT2 * chi / root) / (2.0 * np.sqrt(3.0) * x * (x + 1.0) * np.pi)
    scale = (np.abs(root) / CBRT2 + CBRT2 * np.abs(chi) / np.abs(root)) / (2.0 * np.sqrt(3.0) * x * (x + 1.0) * np.pi)
    if np.any(np.abs(val.imag) > 1e-12 * np.maximum(scale, 1.0)):
        raise DomainError("closed-form density has a non-negligible imaginary part")
    return val.real


def density(x, mu: float, x1: float | None = None):
    """rho(x; mu) on (0, x1); zero outside the band and +inf at x = 0."""
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("density needs finite x")
    if x1 is None:
        x1 = upper_edge(mu)
    out = np.zeros_like(xa)
    # far below x1 the closed form underflows; c / sqrt(x) is exact there to rounding
    tiny = (xa > 0) & (xa < HARD_EDGE_CUTOFF * x1)
    inside = (xa >= HARD_EDGE_CUTOFF * x1) & (xa < x1)
    if np.any(inside):
        out[inside] = np.maximum(_closed_form(xa[inside], float(mu)), 0.0)
    if np.any(tiny):
        out[tiny] = low_frequency_coefficient(mu) / np.sqrt(xa[tiny])
    out[xa == 0] = np.inf
    return out if out.ndim else float(out)


# -- resolvent (independent route) ------------------------------------------

def _moment_coefficients(w, mu: float) -> np.ndarray:
    # the cubic after Gamma = w + c w^2 with w = 1/zeta, divided by w^2
    w = np.asarray(w, dtype=complex)
    return np.stack(
        [w**3 + w**2, 3.0 * w**2 + w - mu * w - mu, 3.0 * w - mu, np.ones_like(w)],
        axis=-1,
    )


def _moment_roots(w, mu: float) -> np.ndarray:
    c = _moment_coefficients(w, mu)
    comp = np.zeros((w.size, 3, 3), dtype=complex)
    comp[:, 0, :] = -c[:, 1:] / c[:, :1]
    comp[:, 1, 0] = 1.0
    comp[:, 2, 1] = 1.0
    r = np.linalg.eigvals(comp)
    for _ in range(3):
        p = ((c[:, :1] * r + c[:, 1:2]) * r + c[:, 2:3]) * r + c[:, 3:4]
        dp = (3.0 * c[:, :1] * r + 2.0 * c[:, 1:2]) * r + c[:, 2:3]
        r = r - np.where(dp != 0, p / np.where(dp != 0, dp, 1.0), 0.0)
    return r


def first_moment(mu: float) -> float:
    """Mean of rho(x; mu): the positive root of mu c^2 + mu c - 1 = 0."""
    return 0.5 * (np.sqrt(1.0 + 4.0 / mu) - 1.0)


def _nearest(roots: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = np.abs(roots - target[:, None])
    order = np.argsort(d, axis=1)
    rows = np.arange(len(target))
    first = d[rows, order[:, 0]]
    second = d[rows, order[:, 1]]
    return roots[rows, order[:, 0]], first < 0.25 * second


def _track(c, w_of, mu, hmin=1e-10):
    """Follow one root of the moment cubic as tau goes 0 -> 1 along w_of(idx, tau)."""
    n = c.size
    tau = np.zeros(n)
    h = np.full(n, 0.05)
    active = np.ones(n, dtype=bool)
    while np.any(active):
        idx = np.flatnonzero(active)
        t_new = np.minimum(tau[idx] + h[idx], 1.0)
        got, ok = _nearest(_moment_roots(w_of(idx, t_new), mu), c[idx])
        acc = idx[ok]
        c[acc] = got[ok]
        tau[acc] = t_new[ok]
        h[acc] *= 1.5
        rej = idx[~ok]
        h[rej] *= 0.5
        if np.any(h[rej] < hmin):
            raise BranchAmbiguity("root tracking failed to separate branches")
        active[acc] = tau[acc] < 1.0
    return c


def resolvent(zeta, mu: float):
    """Physical root Gamma(zeta, mu) of the resolvent cubic.

    With Gamma = w + c w^2 and w = 1/zeta the cubic stays non-degenerate at
    infinity, where the physical c is the first moment of the density and the
    other finite root is below -1. The branch is carried by continuity from
    infinity along a ray to a point well off the real axis, then straight
    down (or up) to zeta. Points on the real axis inside the closed band are
    rejected.
    """
    z = np.atleast_1d(np.asarray(zeta, dtype=complex)).ravel()
    x1 = upper_edge(mu)
    re, im = z.real, z.imag
    if np.any((im == 0) & (re >= 0) & (re <= x1)):
        raise DomainError("resolvent is two-valued on the real band [0, x1]; use boundary_resolvent")

    side = np.where(im > 0, 1.0, -1.0)
    y_top = np.maximum(np.abs(im), 1.0 + x1 + np.abs(re))
    w_mid = 1.0 / (re + 1j * side * y_top)

    # leg 1: ray from w = 0 to w_mid, geometric in |w| from a small start
    s0 = 1e-3 / ((1.0 + mu + 1.0 / mu + x1) * np.abs(w_mid))
    s0 = np.minimum(s0, 1.0)
    got, ok = _nearest(_moment_roots(s0 * w_mid, mu), np.full(z.size, first_moment(mu), dtype=complex))
    if not np.all(ok):
        raise BranchAmbiguity("asymptotic branch not isolated at the starting point")
    logs0 = np.log(s0)
    c = _track(got, lambda i, t: np.exp(logs0[i] * (1.0 - t)) * w_mid[i], mu)

    # leg 2: vertical from y_top to |Im zeta|; real targets finish with a linear step
    dist = np.maximum(np.maximum(-re, re - x1), 0.0)
    y_floor = np.where(im != 0, np.abs(im), 1e-3 * dist)
    ratio = y_floor / y_top

    def leg2(i, t):
        y = y_top[i] * ratio[i] ** t
        return 1.0 / (re[i] + 1j * side[i] * y)

    c = _track(c, leg2, mu)
    real_t = np.flatnonzero(im == 0)
    if real_t.size:
        sub = c[real_t]
        c[real_t] = _track(
            sub,
            lambda i, t: 1.0 / (re[real_t][i] - 1j * (1.0 - t) * y_floor[real_t][i]),
            mu,
        )

    g = 1.0 / z + c / z**2
    # the conversion cancels when Gamma << 1/zeta; polish on the original cubic
    a = cubic_coefficients(z, mu)
    for _ in range(3):
        p = ((a[:, 0] * g + a[:, 1]) * g + a[:, 2]) * g + a[:, 3]
        dp = (3.0 * a[:, 0] * g + 2.0 * a[:, 1]) * g + a[:, 2]
        g = g - np.where(dp != 0, p / np.where(dp != 0, dp, 1.0), 0.0)
    res, scale = cubic_residual(g, z, mu)
    if np.any(res > 1e-12 * scale):
        raise BranchAmbiguity("tracked root does not satisfy the cubic")
    return g if np.ndim(zeta) else complex(g[0])


def boundary_resolvent(x, mu: float):
    """lim Gamma(x - i eps) for real x inside (0, x1).

    On the band the real cubic has a complex-conjugate root pair; the limit
    from below the axis is the member with positive imaginary part.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    r = cubic_roots(xa.astype(complex), mu)
    order = np.argsort(r.imag, axis=1)
    rows = np.arange(xa.size)
    top = r[rows, order[:, 2]]
    mid = r[rows, order[:, 1]]
    if np.any(top.imag <= 0) or np.any(np.abs(mid.imag) > 1e-6 * np.abs(top.imag)):
        raise BranchAmbiguity("no isolated root with positive imaginary part")
    return top if np.ndim(x) else complex(top[0])


def resolvent_density(x, mu: float):
    """(1/pi) Im of the boundary resolvent, i.e. the density via the cubic."""
    g = boundary_resolvent(x, mu)
    return np.imag(g) / np.pi


# -- integration helpers ----------------------------------------------------

def band_map(t, x1: float):
    """x(t) = x1 (1 - cos pi t) / 2 and dx/dt.

    Near both ends x - 0 and x1 - x are quadratic in t, which removes the
    1/sqrt(x) and sqrt(x1 - x) endpoint behavior from integrands.
    """
    t = np.asarray(t, dtype=float)
    # x1 sin^2(pi t / 2) is the same map without cancellation near t = 0
    return x1 * np.sin(0.5 * np.pi * t) ** 2, 0.5 * np.pi * x1 * np.sin(np.pi * t)


def band_inverse(x, x1: float):
    """t with band_map(t, x1)[0] == x, for x in [0, x1]."""
    return 2.0 / np.pi * np.arcsin(np.sqrt(np.clip(np.asarray(x, dtype=float) / x1, 0.0, 1.0)))


def band_integral(f: Callable, mu: float, x1: float, epsabs=1e-13, epsrel=1e-10, t_hi: float = 1.0, points=None):
    """Integrate f(x) rho(x; mu) over (0, x(t_hi)) with the band substitution.

    ``points`` are optional x-values where f changes scale; they become quad
    breakpoints in the band variable.
    """

    def integrand(t):
        x, dx = band_map(t, x1)
        if x <= 0 or x >= x1:
            return 0.0
        return f(x) * float(_closed_form(np.array([x]), mu)[0]) * dx

    brk = None
    if points is not None:
        xp = np.asarray(points, dtype=float)
        tp = band_inverse(xp[(xp > 0) & (xp < x1)], x1)
        brk = sorted(float(v) for v in tp if 0 < v < t_hi) or None
    return integrate.quad(integrand, 0.0, t_hi, epsabs=epsabs, epsrel=epsrel, limit=500, points=brk)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


def band_cumulative(t, mu: float, x1: float) -> np.ndarray:
    """Integral of rho over (0, x(t)) for an array of t in [0, 1].

    In the band variable the integrand is analytic, so a fixed Gauss-Legendre
    rule on [0, t] converges geometrically.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = 0.5 * t[:, None] * (1.0 + _GL_NODES[None, :])
    x, dx = band_map(u, x1)
    inside = (x > 0) & (x < x1)
    g = np.zeros_like(x)
    g[inside] = _closed_form(x[inside], mu) * dx[inside]
    return 0.5 * t * (g @ _GL_WEIGHTS)


@dataclass
class AnalyticDensity:
    """Large-N density of eigenvalues w^2 of H with unit omega0^2 scaling.

    rho_H(w^2) = rho(w^2 / omega0^2; mu) / omega0^2 on (0, omega0^2 x1).
    """

    mu: float
    omega0_sq: float = 1.0
    x1: float = field(init=False)
    normalization_check: float = field(init=False)

    def __post_init__(self):
        if not self.mu > 0 or not self.omega0_sq > 0:
            raise DomainError("mu and omega0_sq must be positive")
        self.x1 = upper_edge(self.mu)
        val = float(band_cumulative(1.0, self.mu, self.x1)[0])
        self.normalization_check = val
        if abs(val - 1.0) > NORM_TOL:
            raise QuadratureFailure(f"density normalizes to {val!r}")

    @classmethod
    def from_params(cls, params) -> "AnalyticDensity":
        return cls(params.mu, params.omega0_sq)

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, self.omega0_sq * self.x1

    def pdf(self, w2):
        return density(np.asarray(w2, dtype=float) / self.omega0_sq, self.mu, self.x1) / self.omega0_sq

    def cdf(self, w2):
        w2 = np.asarray(w2, dtype=float)
        x = np.clip(w2 / self.omega0_sq, 0.0, self.x1)
        t = band_inverse(x, self.x1)
        out = band_cumulative(t.ravel(), self.mu, self.x1).reshape(w2.shape)
        return out if out.ndim else float(out)

    def ppf(self, q: float) -> float:
        if not 0 < q < 1:
            raise DomainError("quantile must lie in (0, 1)")
        lo, hi = self.support
        return float(optimize.brentq(lambda v: self.cdf(v) - q, lo, hi, xtol=1e-15 * hi))

    def expect(self, f: Callable, epsrel: float = 1e-10, points=None) -> tuple[float, float]:
        """(integral, error) of f(w^2) rho_H(w^2) d(w^2); ``points`` are w^2 breakpoints."""
        w0 = self.omega0_sq
        xp = None if points is None else np.asarray(points, dtype=float) / w0
        return band_integral(lambda x: f(w0 * x), self.mu, self.x1, epsabs=0.0, epsrel=epsrel, points=xp)

    def low_frequency_coefficient(self) -> float:
        """c in rho_H(w^2) ~ c / w as w -> 0 (physical units)."""
        return low_frequency_coefficient(self.mu) / np.sqrt(self.omega0_sq)

    def to_csv(self, points: int = 1000) -> str:
        x = np.linspace(0.0, self.x1, points + 2)[1:-1]
        rho = density(x, self.mu, self.x1)
        buf = io.StringIO()
        buf.write(f"# mu={self.mu!r} x1={self.x1!r} normalization_check={self.normalization_check!r}\n")
        buf.write("x,rho\n")
        for a, b in zip(x, rho):
            buf.write(f"{a:.17g},{b:.17g}\n")
        return buf.getvalue()


def low_frequency_coefficient(mu: float, s: float | None = None) -> float:
    """lim sqrt(x) rho(x; mu) as x -> 0, Richardson-extrapolated in sqrt(x).

    sqrt(x) rho = c + a sqrt(x) + O(x); combining sqrt(x) = s and s/2 cancels a.
    The default s = 1e-6 sqrt(x1) leaves an O(1e-12) relative remainder.
    """
    if s is None:
        s = 1e-6 * np.sqrt(upper_edge(mu))
    g = lambda r: r * float(_closed_form(np.array([r * r]), float(mu))[0])
    return 2.0 * g(0.5 * s) - g(s)


def density_physical(omega_sq, params) -> np.ndarray:
    """Density over w^2 for unscaled parameters (m0, sigma_M, sigma_K)."""
    w0 = params.omega0_sq
    return density(np.asarray(omega_sq, dtype=float) / w0, params.mu) / w0


# -- Marchenko-Pastur reference --------------------------------------------

def marchenko_pastur(x):
    """Square-case Marchenko-Pastur density sqrt(4 - x) / (2 pi sqrt(x)) on (0, 4)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 4)
    out[inside] = np.sqrt(4.0 - x[inside]) / (2.0 * np.pi * np.sqrt(x[inside]))
    out[x == 0] = np.inf
    return out if out.ndim else float(out)


def marchenko_pastur_cdf(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 4, 1.0, 0.0)
    inside = (x > 0) & (x < 4)
    xi = x[inside]
    e = np.sqrt(xi * (4.0 - xi))
    out[inside] = (np.pi + e - 2.0 * np.arctan((2.0 - xi) / e)) / (2.0 * np.pi)
    return out if out.ndim else float(out)


@dataclass
class MarchenkoPastur:
    """Marchenko-Pastur law stretched to the support (0, 4 scale)."""

    scale: float = 1.0

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, 4.0 * self.scale

    def pdf(self, x):
        return marchenko_pastur(np.asarray(x, dtype=float) / self.scale) / self.scale

    def cdf(self, x):
        return marchenko_pastur_cdf(np.asarray(x, dtype=float) / self.scale)

    def ppf(self, q: float) -> float:
        return float(optimize.brentq(lambda v: self.cdf(v) - q, 0.0, 4.0 * self.scale, xtol=1e-14, rtol=1e-13))

    def expect(self, f: Callable, epsrel: float = 1e-10, points=None) -> tuple[float, float]:
        """(integral, error) of f(x) times the law; ``points`` are x breakpoints."""
        x1 = 4.0 * self.scale

        def integrand(t):
            x, dx = band_map(t, x1)
            if x <= 0 or x >= x1:
                return 0.0
            return f(x) * float(self.pdf(x)) * dx

        brk = None
        if points is not None:
            xp = np.asarray(points, dtype=float)
            brk = sorted(float(v) for v in band_inverse(xp[(xp > 0) & (xp < x1)], x1)) or None
        return integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=500, points=brk)
