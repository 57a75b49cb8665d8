"""Model specifications: signal autocovariances, slowly varying amplitudes,
and spectral densities for the observation model z_i = sigma * n^(-beta) * x_i + y_i.

The signal process x is stationary (up to a boundary term for the
integrated-motion preset) with long- or short-range dependence; the noise y
is a K-th order difference of white noise with level tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn, zeta

from ._quad import (
    QuadratureError,
    cos_tail_sum,
    gauss_nodes,
    panel_integrate,
    refine_to_tolerance,
    smoothed_integrate,
)

DEFAULT_KMAX = 100_000

DELTA_DELTAT = "delta_deltaT"   # Cov(y) = tau^2 (D D^t)^K
DELTAT_DELTA = "deltaT_delta"   # Cov(y) = tau^2 (D^t D)^K
CONVENTIONS = (DELTA_DELTAT, DELTAT_DELTA)


class DomainError(ValueError):
    """A parameter lies outside its mathematically valid domain."""


# ---------------------------------------------------------------------------
# autocovariance kernels
# ---------------------------------------------------------------------------

def _fgn_kernel(H: float, w):
    """Second difference of |w|^(2H)/2 at real lag w.

    Direct evaluation loses precision for large |w| (the three terms nearly
    cancel), so beyond |w| = 8 the binomial series in 1/w^2 is used.
    """
    w = np.abs(np.asarray(w, dtype=float))
    out = np.empty_like(w)
    small = w < 8.0
    ws = w[small]
    out[small] = 0.5 * ((ws + 1.0) ** (2 * H) + np.abs(ws - 1.0) ** (2 * H)
                        - 2.0 * ws ** (2 * H))
    wl = w[~small]
    if wl.size:
        acc = np.zeros_like(wl)
        inv2 = wl ** (-2.0)
        coef = 1.0
        powr = np.ones_like(wl)
        for m in range(1, 9):
            coef *= (2 * H - (2 * m - 2)) * (2 * H - (2 * m - 1)) / ((2 * m - 1) * (2 * m))
            powr = powr * inv2
            acc += coef * powr
        out[~small] = wl ** (2 * H) * acc
    return out


def gamma_fgn(H: float, k):
    """Autocovariance of unit-variance fractional Gaussian noise at lag k."""
    if not 0.0 < H < 1.0:
        raise DomainError(f"Hurst index must lie in (0,1), got {H}")
    k = np.asarray(k)
    if np.any(k < 0):
        raise DomainError("lag must be nonnegative")
    return _fgn_kernel(H, k) if k.ndim else float(_fgn_kernel(H, k))


def _triangle_integral(fun, k: float, rtol: float = 1e-10) -> float:
    """``int_{-1}^{1} (1 - |t|) fun(k + t) dt`` with order-doubling Gauss rule.

    This is the exact reduction of the double integral of ``fun(k + v - u)``
    over the unit square; the split at t = 0 plus endpoint smoothing keeps
    the kernel singularities at panel edges.
    """
    def value(m):
        left = smoothed_integrate(lambda t: (1.0 + t) * fun(k + t), -1.0, 0.0, m)
        right = smoothed_integrate(lambda t: (1.0 - t) * fun(k + t), 0.0, 1.0, m)
        return left + right

    return refine_to_tolerance(value, m0=32, m_max=16384, rtol=rtol,
                               what="unit-square covariance integral")


@lru_cache(maxsize=None)
def gamma_integrated_fbm(H: float, k: int) -> float:
    """Stationary autocovariance of consecutive-window increments of
    integrated fractional motion (window length 1), valid for H in (0, 1/4).

    Quadrature of the pointwise increment kernel over the unit square,
    refined until successive orders agree to 1e-10 relative.
    """
    if not 0.0 < H < 0.25:
        raise DomainError(f"integrated-motion preset requires H in (0, 1/4), got {H}")
    if k < 0:
        raise DomainError("lag must be nonnegative")
    return _triangle_integral(lambda w: _fgn_kernel(H, w), float(k))


@lru_cache(maxsize=32)
def _gamma_integrated_block(H: float, kmax: int):
    """Vectorized stationary lags 0..kmax for the integrated-motion preset.

    Fixed-order smoothed Gauss rule (validated against the adaptive scalar
    path); lags 0..2 are delegated to the adaptive rule since their kernels
    have interior-adjacent singular points.
    """
    out = np.empty(kmax + 1)
    for k in range(min(3, kmax + 1)):
        out[k] = gamma_integrated_fbm(H, k)
    if kmax >= 3:
        m = 48
        x, w = gauss_nodes(m)
        ks = np.arange(3, kmax + 1, dtype=float)
        acc = np.zeros_like(ks)
        for a, b in ((-1.0, 0.0), (0.0, 1.0)):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            t = mid + half * x
            wt = w * half * (1.0 - np.abs(t))
            # chunk lags to bound the (lags x nodes) kernel matrix
            for lo in range(0, ks.size, 8192):
                sl = slice(lo, min(lo + 8192, ks.size))
                acc[sl] += _fgn_kernel(H, ks[sl, None] + t[None, :]) @ wt
        out[3:] = acc
    return out


def integrated_fbm_boundary_cov(H: float, n: int) -> np.ndarray:
    """Cov(x_1, x_j), j = 1..n, for the integrated-motion preset.

    x_1 is the plain window integral (no differencing), hence nonstationary.
    """
    out = np.empty(n)
    out[0] = 1.0 / (2.0 * H + 2.0)  # Var of a unit-window integral of the motion
    for j in range(2, n + 1):
        k = j - 1
        # Cov(x_1, x_j) = smooth drift part (exact) minus kernel part
        g1 = lambda x: x ** (2 * H + 1) / (2 * H + 1)
        drift = 0.5 * ((g1(k + 1.0) - g1(float(k))) - (g1(float(k)) - g1(k - 1.0)))
        kern = _triangle_integral(
            lambda t: 0.5 * (np.abs(k + t) ** (2 * H) - np.abs(k - 1.0 + t) ** (2 * H)),
            0.0,
        )
        out[j - 1] = drift - kern
    return out


# ---------------------------------------------------------------------------
# spec types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AutocovarianceSpec:
    """Autocovariance of the signal process, gamma_k = gamma_{-k}.

    kind: "fgn" (Hurst H in (0,1)), "integrated_fbm_increment" (H in (0,1/4)),
    or "user_sequence" (explicit leading values).  ``scale`` multiplies every
    gamma_k (used e.g. to normalize sum gamma_k^2 to one).
    """
    kind: str
    hurst: float | None = None
    values: tuple[float, ...] = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fgn", "user_sequence", "integrated_fbm_increment"):
            raise DomainError(f"unknown autocovariance kind {self.kind!r}")
        if self.kind == "fgn" and not (self.hurst is not None and 0 < self.hurst < 1):
            raise DomainError("fgn requires Hurst index in (0,1)")
        if self.kind == "integrated_fbm_increment" and not (
                self.hurst is not None and 0 < self.hurst < 0.25):
            raise DomainError("integrated_fbm_increment requires H in (0, 1/4)")
        if self.kind == "user_sequence" and len(self.values) == 0:
            raise DomainError("user_sequence requires at least gamma_0")

    @property
    def default_alpha(self) -> float | None:
        if self.hurst is not None:
            return 0.5 - self.hurst
        return None


@dataclass(frozen=True)
class SlowlyVaryingSpec:
    """Slowly varying amplitude: constant c, or c * |log x|^rho (x > 1)."""
    kind: str
    c: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "log_power"):
            raise DomainError(f"unknown slowly varying kind {self.kind!r}")
        if self.kind == "constant" and self.c < 0:
            raise DomainError("constant amplitude must be nonnegative")
        if self.kind == "log_power":
            if self.c <= 0:
                raise DomainError("log_power amplitude must be positive")
            if self.rho <= -0.5:
                raise DomainError("log_power exponent must be > -1/2")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full_like(x, self.c)
        else:
            out = self.c * np.abs(np.log(x)) ** self.rho
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelSpec:
    """One instance of the observation model z = sigma n^(-beta) x + y."""
    n: int
    beta: float
    sigma: float
    tau: float
    K: int
    x_cov: AutocovarianceSpec
    ell: SlowlyVaryingSpec
    alpha: float
    noise_convention: str = DELTA_DELTAT
    preset: str = "user"

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be a positive integer")
        if self.beta <= 0:
            raise DomainError("beta must be positive")
        if self.sigma < 0:
            raise DomainError("sigma must be nonnegative")
        if self.tau <= 0:
            raise DomainError("tau must be positive")
        if self.K < 0 or int(self.K) != self.K:
            raise DomainError("K must be a nonnegative integer")
        if not -0.5 < self.alpha < 0.5:
            raise DomainError("alpha must lie in (-1/2, 1/2)")
        if self.K <= self.alpha:
            raise DomainError("K must exceed alpha (diamond = 1/(K - alpha) > 0)")
        if self.noise_convention not in CONVENTIONS:
            raise DomainError(f"noise_convention must be one of {CONVENTIONS}")

    @property
    def diamond(self) -> float:
        return 1.0 / (self.K - self.alpha)

    @property
    def is_critical(self) -> bool:
        """diamond == 4 decided in exact rational arithmetic on (K, alpha)."""
        return Fraction(self.K) - Fraction(self.alpha) == Fraction(1, 4)

    # -- autocovariance ----------------------------------------------------

    def gamma(self, k):
        """gamma_k of the (stationary part of the) signal process.

        user_sequence specs are extended beyond the provided values by the
        asymptote sign(-alpha) k^(-2 alpha - 1) ell(k).
        """
        xc = self.x_cov
        if xc.kind == "fgn":
            return xc.scale * gamma_fgn(xc.hurst, k)
        if xc.kind == "integrated_fbm_increment":
            k_arr = np.asarray(k)
            kmax = int(k_arr.max()) if k_arr.size else 0
            block = _gamma_integrated_block(xc.hurst, max(kmax, 3))
            out = xc.scale * block[k_arr]
            return float(out) if k_arr.ndim == 0 else out
        k_arr = np.atleast_1d(np.asarray(k, dtype=int))
        vals = np.asarray(xc.values, dtype=float)
        out = np.empty(k_arr.shape, dtype=float)
        inside = k_arr < len(vals)
        out[inside] = vals[k_arr[inside]]
        if np.any(~inside):
            kk = k_arr[~inside].astype(float)
            out[~inside] = np.sign(-self.alpha) * kk ** (-2 * self.alpha - 1) * self.ell(kk)
        out *= xc.scale
        return float(out[0]) if np.ndim(k) == 0 else out

    def gamma_array(self, kmax: int) -> np.ndarray:
        return np.asarray(self.gamma(np.arange(kmax + 1)))

    def cov_x(self, n: int | None = None) -> np.ndarray:
        """Dense covariance of (x_1 .. x_n); Toeplitz except for the
        nonstationary first row/column of the integrated-motion preset."""
        from scipy.linalg import toeplitz
        n = self.n if n is None else n
        g = self.gamma_array(n - 1) if n > 1 else np.array([self.gamma(0)])
        cov = toeplitz(g)
        if self.x_cov.kind == "integrated_fbm_increment":
            b = self.x_cov.scale * integrated_fbm_boundary_cov(self.x_cov.hurst, n)
            cov[0, :] = b
            cov[:, 0] = b
        return cov

    # -- spectral densities -------------------------------------------------

    def _check_lambda(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0) or np.any(lam > np.pi):
            raise DomainError("frequency must lie in (0, pi]")
        return lam

    def spectral_density_x(self, lam, k_max: int = DEFAULT_KMAX):
        """Signal spectral density f = sum_k gamma_k cos(k lam).

        Truncated cosine series over lags 0..k_max plus an analytic tail
        built from the power-law asymptote of gamma.
        """
        lam = self._check_lambda(lam)
        scalar = lam.ndim == 0
        lam = np.atleast_1d(lam)
        g = self.gamma_array(k_max)
        out = np.full(lam.shape, g[0])
        kk = np.arange(1, k_max + 1, dtype=float)
        for lo in range(0, k_max, 16384):
            sl = slice(lo, min(lo + 16384, k_max))
            out += 2.0 * g[1 + lo:1 + sl.stop] @ np.cos(np.outer(kk[sl], lam))
        out += 2.0 * self._gamma_tail_cos(lam, k_max + 1)
        return float(out[0]) if scalar else out

    def _gamma_tail_cos(self, lam, k_start: int):
        """sum_{k >= k_start} gamma_k cos(k lam) from the asymptote of gamma."""
        s = float(np.sign(-self.alpha))
        if s == 0.0:
            return np.zeros_like(lam)
        p = 2.0 * self.alpha + 1.0
        # preset ell amplitudes already carry the gamma scale; the user-sequence
        # extension in gamma() applies x_cov.scale on top of ell
        scale = self.x_cov.scale if self.x_cov.kind == "user_sequence" else 1.0
        if self.ell.kind == "constant":
            return s * cos_tail_sum(p, lam, k_start, ell_const=scale * self.ell.c)
        return s * scale * cos_tail_sum(p, lam, k_start, ell_fun=self.ell)

    def spectral_density_x_aliased(self, lam):
        """Exact fGn spectral density via the folded power law
        2 sin(pi H) Gamma(2H+1) (1 - cos lam) sum_j |2 pi j + lam|^(-2H-1),
        with the lattice sum expressed through the Hurwitz zeta function.
        Only available for the fgn kind; independent of the series evaluator.
        """
        if self.x_cov.kind != "fgn":
            raise DomainError("aliased evaluator only applies to the fgn kind")
        lam = self._check_lambda(lam)
        H = self.x_cov.hurst
        s = 2.0 * H + 1.0
        q = lam / (2.0 * np.pi)
        lattice = zeta(s, q) + zeta(s, 1.0 - q)
        val = (2.0 * np.sin(np.pi * H) * gamma_fn(2.0 * H + 1.0)
               * 2.0 * np.sin(lam / 2.0) ** 2 * (2.0 * np.pi) ** (-s) * lattice)
        return self.x_cov.scale * val

    def spectral_density_f(self, lam):
        """Best available evaluator for f (exact folded form for fgn)."""
        if self.x_cov.kind == "fgn":
            return self.spectral_density_x_aliased(lam)
        return self.spectral_density_x(lam)

    def noise_spectral_density(self, lam):
        lam = self._check_lambda(lam)
        return 4.0 ** self.K * self.tau ** 2 * np.sin(lam / 2.0) ** (2 * self.K)

    def spectral_density_z(self, lam):
        """h_n = sigma^2 n^(-2 beta) f + 4^K tau^2 sin^(2K)(lam/2)."""
        lam = self._check_lambda(lam)
        return (self.sigma ** 2 * float(self.n) ** (-2.0 * self.beta)
                * self.spectral_density_f(lam) + self.noise_spectral_density(lam))

    def sum_gamma_squared(self, rtol: float = 1e-6) -> float:
        """sum_{k in Z} gamma_k^2, by truncation plus a power-law tail estimate.

        Requires alpha > -1/4 (square-summable).  The estimate amp^2 * (m+1/2)^
        (-4 alpha - 1)/(4 alpha + 1) uses the local power-law amplitude at the
        truncation point; the truncation point is doubled until two corrected
        totals agree to ``rtol``, which bounds the tail-estimate error.
        """
        if self.alpha <= -0.25:
            raise DomainError("sum of squared autocovariances diverges for alpha <= -1/4")

        def total(m: int) -> float:
            g = self.gamma_array(m)
            partial = g[0] ** 2 + 2.0 * float(np.sum(g[1:] ** 2))
            amp2 = float(g[m]) ** 2 * float(m) ** (4 * self.alpha + 2)
            tail = 2.0 * amp2 * (m + 0.5) ** (-4 * self.alpha - 1) / (4 * self.alpha + 1)
            return partial + tail

        m = 1 << 14
        prev = total(m)
        while m <= (1 << 23):
            m <<= 1
            cur = total(m)
            if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
                return cur
            prev = cur
        raise QuadratureError(
            "squared-autocovariance sum did not stabilize",
            info={"last": prev, "k_max": m, "rtol": rtol})


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def fbm_wn_spec(n: int, H: float, sigma: float = 1.0, tau: float = 1.0) -> ModelSpec:
    """Increments of scaled fractional motion plus differenced white noise:
    beta = H, K = 1, alpha = 1/2 - H."""
    if not 0 < H < 1:
        raise DomainError(f"Hurst index must lie in (0,1), got {H}")
    return ModelSpec(
        n=n, beta=H, sigma=sigma, tau=tau, K=1,
        x_cov=AutocovarianceSpec(kind="fgn", hurst=H),
        ell=SlowlyVaryingSpec("constant", H * abs(2 * H - 1)),
        alpha=0.5 - H,
        noise_convention=DELTA_DELTAT,
        preset="fbm-wn",
    )


def large_error_spec(n: int, H: float, beta: float, sigma: float = 1.0,
                     tau: float = 1.0, normalize: bool | None = None) -> ModelSpec:
    """Long-range dependent signal observed under noise growing like n^beta:
    K = 0, alpha = 1/2 - H with H in (1/2, 1); requires 0 < beta < H - 1/2.

    ``normalize`` rescales gamma so that sum gamma_k^2 = 1 (only possible for
    H < 3/4); defaults to True exactly in that range.
    """
    if not 0.5 < H < 1:
        raise DomainError(f"large-error preset requires H in (1/2, 1), got {H}")
    if not 0 < beta < H - 0.5:
        raise DomainError(f"large-error preset requires 0 < beta < H - 1/2 = {H - 0.5}")
    if normalize is None:
        normalize = H < 0.75
    scale = 1.0
    if normalize:
        if H >= 0.75:
            raise DomainError("normalization impossible for H >= 3/4 "
                              "(squared autocovariances are not summable)")
        base = ModelSpec(
            n=n, beta=beta, sigma=sigma, tau=tau, K=0,
            x_cov=AutocovarianceSpec(kind="fgn", hurst=H),
            ell=SlowlyVaryingSpec("constant", H * abs(2 * H - 1)),
            alpha=0.5 - H, preset="large-error")
        scale = 1.0 / math.sqrt(base.sum_gamma_squared())
    return ModelSpec(
        n=n, beta=beta, sigma=sigma, tau=tau, K=0,
        x_cov=AutocovarianceSpec(kind="fgn", hurst=H, scale=scale),
        ell=SlowlyVaryingSpec("constant", scale * H * abs(2 * H - 1)),
        alpha=0.5 - H,
        preset="large-error",
    )


def integrated_fbm_spec(n: int, H: float, sigma: float = 1.0, tau: float = 1.0) -> ModelSpec:
    """Twice-differenced observations of integrated fractional motion under
    white noise: beta = 1 + H, K = 2, alpha = 1/2 - H with H in (0, 1/4)."""
    if not 0 < H < 0.25:
        raise DomainError(f"integrated-motion preset requires H in (0, 1/4), got {H}")
    return ModelSpec(
        n=n, beta=1.0 + H, sigma=sigma, tau=tau, K=2,
        x_cov=AutocovarianceSpec(kind="integrated_fbm_increment", hurst=H),
        ell=SlowlyVaryingSpec("constant", H * (1.0 - 2.0 * H)),
        alpha=0.5 - H,
        noise_convention=DELTA_DELTAT,
        preset="integrated-fbm",
    )


def user_spec(n: int, beta: float, sigma: float, tau: float, K: int,
              gamma_values, alpha: float, ell: SlowlyVaryingSpec,
              noise_convention: str = DELTA_DELTAT) -> ModelSpec:
    """Fully user-specified model; alpha is taken as known structure."""
    return ModelSpec(
        n=n, beta=beta, sigma=sigma, tau=tau, K=K,
        x_cov=AutocovarianceSpec(kind="user_sequence",
                                 values=tuple(float(v) for v in gamma_values)),
        ell=ell, alpha=alpha, noise_convention=noise_convention, preset="user",
    )


PRESET_IDS = ("fbm-wn", "large-error", "integrated-fbm", "user")


def with_n(spec: ModelSpec, n: int) -> ModelSpec:
    """Same model at a different sample size."""
    return replace(spec, n=n)
