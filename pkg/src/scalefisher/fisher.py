"""Fisher information for the scale parameter sigma^2, three ways: exact
finite-n eigenvalue sum, spectral-integral approximation, and closed-form
asymptotics with the subcritical / critical / supercritical phase split."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn

from ._quad import QuadratureError, panel_integrate
from .linalg import diff_cov, whiten, WhitenedSystem
from .model import DEFAULT_KMAX, DomainError, ModelSpec, with_n

REGIME_SUB = "subcritical"
REGIME_CRITICAL = "critical"
REGIME_SUPER = "supercritical"


def information_sum(u: float, lam: np.ndarray, n: int, beta: float) -> float:
    """Eigenvalue form (1/2) sum lam_i^2 n^(-4 beta) / (u lam_i n^(-2 beta) + 1)^2."""
    w = lam * float(n) ** (-2.0 * beta)
    return 0.5 * float(np.sum((w / (u * w + 1.0)) ** 2))


@lru_cache(maxsize=6)
def whitened_system(spec: ModelSpec) -> WhitenedSystem:
    """Whitening of (Cov(x), Cov(y)) for a model spec, cached per spec."""
    cov_x = spec.cov_x()
    cov_y = diff_cov(spec.n, spec.K, spec.tau, spec.noise_convention)
    return whiten(cov_x, cov_y)


def fisher_exact(spec: ModelSpec, system: WhitenedSystem | None = None,
                 debug: bool = False) -> float:
    """Exact finite-n Fisher information for sigma^2.

    With ``debug`` and n <= 256, cross-checks the eigenvalue sum against the
    raw trace form (1/2) tr([n^(-2 beta) Cov(x) Cov(z)^(-1)]^2).
    """
    system = whitened_system(spec) if system is None else system
    val = information_sum(spec.sigma ** 2, system.lam, spec.n, spec.beta)
    if debug and spec.n <= 256:
        cov_x = spec.cov_x()
        cov_z = (spec.sigma ** 2 * float(spec.n) ** (-2.0 * spec.beta) * cov_x
                 + diff_cov(spec.n, spec.K, spec.tau, spec.noise_convention))
        b = float(spec.n) ** (-2.0 * spec.beta) * np.linalg.solve(cov_z, cov_x)
        trace_val = 0.5 * float(np.sum(b * b.T))
        if abs(trace_val - val) > 1e-6 * max(abs(val), 1e-300):
            raise RuntimeError(
                f"eigenvalue sum {val!r} disagrees with trace form {trace_val!r}")
    return val


# ---------------------------------------------------------------------------
# spectral-integral approximation
# ---------------------------------------------------------------------------

def _integrand_factory(spec: ModelSpec, k_max: int):
    pref = spec.sigma ** 2 * float(spec.n) ** (-2.0 * spec.beta)

    if spec.x_cov.kind == "fgn":
        f_eval = spec.spectral_density_x_aliased
    else:
        f_eval = lambda lam: spec.spectral_density_x(lam, k_max=k_max)

    def ratio_sq(lam):
        # f^2/h^2 = 1/(pref + noise/f)^2, stable where f is very large or tiny
        fv = np.asarray(f_eval(lam), dtype=float)
        nv = spec.noise_spectral_density(lam)
        out = np.zeros_like(fv)
        pos = fv > 0
        with np.errstate(divide="ignore", over="ignore"):
            out[pos] = 1.0 / (pref + nv[pos] / fv[pos]) ** 2
        return out

    def signal_minus_noise(lam):
        return pref * np.asarray(f_eval(lam), dtype=float) - spec.noise_spectral_density(lam)

    return ratio_sq, signal_minus_noise


def spectral_crossover(spec: ModelSpec, k_max: int = DEFAULT_KMAX) -> float | None:
    """Frequency where the scaled signal spectrum crosses the noise spectrum,
    or None if the two never cross on (0, pi]."""
    _, diff = _integrand_factory(spec, k_max)
    grid = np.geomspace(1e-30, np.pi, 601)
    vals = diff(grid)
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if idx.size == 0:
        return None
    lo, hi = grid[idx[0]], grid[idx[0] + 1]
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if diff(np.array([mid]))[0] * diff(np.array([lo]))[0] <= 0:
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi)


def fisher_integral(spec: ModelSpec, rtol: float = 1e-6,
                    k_max: int = DEFAULT_KMAX, max_panels: int = 2048) -> float:
    """Spectral-integral Fisher approximation
    (n^(1-4 beta) / 2 pi) * int_0^pi f^2 / h_n^2.

    Adaptive log-spaced panels anchored at the signal/noise crossover, where
    the integrand drops off the plateau sigma^-4 n^(4 beta); panel counts are
    doubled until two refinements agree to ``rtol`` relative.
    """
    ratio_sq, _ = _integrand_factory(spec, k_max)
    anchor = spectral_crossover(spec, k_max) or np.pi
    lam_lo = max(anchor * 1e-9, 1e-300)

    def value(m: int) -> float:
        edges = [np.geomspace(lam_lo, anchor, m + 1)]
        if anchor < np.pi:
            edges.append(np.geomspace(anchor, np.pi, m + 1)[1:])
        edges = np.concatenate(edges)
        acc = panel_integrate(ratio_sq, edges, nodes=16)
        return acc + float(ratio_sq(np.array([lam_lo]))[0]) * lam_lo

    prev = value(64)
    m = 128
    while m <= max_panels:
        cur = value(m)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            break
        prev = cur
        m *= 2
    else:
        raise QuadratureError(
            "Fisher spectral integral did not converge",
            info={"last": prev, "previous_panels": m // 2, "rtol": rtol,
                  "crossover": anchor, "n": spec.n})
    return float(spec.n) ** (1.0 - 4.0 * spec.beta) / (2.0 * np.pi) * cur


def fisher_integral_bracket(spec: ModelSpec, rtol: float = 1e-6,
                            k_max: int = DEFAULT_KMAX) -> tuple[float, float]:
    """Lower/upper Fisher values from the elementary noise-spectrum bounds
    4^-K tau^2 lam^(2K) <= noise <= tau^2 lam^(2K)."""
    out = []
    for bound in ("upper", "lower"):
        sub = spec
        pref = sub.sigma ** 2 * float(sub.n) ** (-2.0 * sub.beta)
        fac = 4.0 ** (-sub.K) if bound == "upper" else 1.0

        def ratio_sq(lam, fac=fac, sub=sub, pref=pref):
            fv = np.asarray(sub.spectral_density_f(lam), dtype=float)
            nv = fac * sub.tau ** 2 * np.asarray(lam) ** (2 * sub.K)
            res = np.zeros_like(fv)
            pos = fv > 0
            res[pos] = 1.0 / (pref + nv[pos] / fv[pos]) ** 2
            return res

        anchor = spectral_crossover(sub, k_max) or np.pi
        lam_lo = max(anchor * 1e-9, 1e-300)
        edges = np.concatenate([np.geomspace(lam_lo, anchor, 513),
                                np.geomspace(anchor, np.pi, 513)[1:]]) \
            if anchor < np.pi else np.geomspace(lam_lo, np.pi, 1025)
        val = panel_integrate(ratio_sq, edges, nodes=16) \
            + float(ratio_sq(np.array([lam_lo]))[0]) * lam_lo
        out.append(float(sub.n) ** (1.0 - 4.0 * sub.beta) / (2.0 * np.pi) * val)
    high, low = out[0], out[1]
    return low, high


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _phase_prefactor(diamond: float) -> float:
    """(2 - dia) dia / (8 sin(dia pi / 2)) evaluated without cancellation.

    Writing d = dia - 2, the expression equals dia * d / (8 sin(pi d / 2)),
    smooth through the removable singularity at dia = 2 with limit 1/(2 pi).
    """
    d = diamond - 2.0
    return diamond / (4.0 * np.pi * np.sinc(d / 2.0))


def closed_form_constant_cH(H: float) -> float:
    """Asymptotic constant for the fractional-motion-plus-noise family,
    c_H = H sin^(1/(2H+1))(pi H) Gamma(2H+1)^(1/(2H+1))
          / ((2H+1)^2 sin(pi/(2H+1)))."""
    if not 0.0 < H < 1.0:
        raise DomainError(f"Hurst index must lie in (0,1), got {H}")
    e = 1.0 / (2.0 * H + 1.0)
    return (H * math.sin(math.pi * H) ** e * gamma_fn(2.0 * H + 1.0) ** e
            / ((2.0 * H + 1.0) ** 2 * math.sin(math.pi * e)))


def closed_form_constant_C(diamond: float, alpha: float) -> float:
    """Subcritical closed-form constant
    C = (2 - dia) dia / (8 sin(dia pi/2)) * (2 sign(-alpha) Gamma(-2 alpha) cos(pi alpha))^(dia/2)."""
    if not 0.0 < diamond < 4.0:
        raise DomainError(f"diamond must lie in (0,4), got {diamond}")
    if not -0.5 < alpha < 0.5 or alpha == 0.0:
        raise DomainError("alpha must lie in (-1/2, 1/2) and be nonzero "
                          "(the constant diverges as alpha -> 0)")
    c_alpha = 2.0 * math.copysign(1.0, -alpha) * gamma_fn(-2.0 * alpha) \
        * math.cos(math.pi * alpha)
    return _phase_prefactor(diamond) * c_alpha ** (diamond / 2.0)


def critical_fisher_log_integral(spec: ModelSpec) -> float:
    """General critical-case form n^(1-4 beta) tau^-4 int_{q_n}^1 ell^2(1/lam) dlam/lam
    with q_n = n^(-4 beta) ell^2(n^(4 beta)), by quadrature in t = log(1/lam)."""
    scale = spec.x_cov.scale if spec.x_cov.kind == "user_sequence" else 1.0
    ell = lambda x: scale * spec.ell(x)
    n = float(spec.n)
    q_n = n ** (-4.0 * spec.beta) * ell(n ** (4.0 * spec.beta)) ** 2
    t_hi = math.log(1.0 / q_n)
    edges = np.linspace(0.0, t_hi, 257)
    val = panel_integrate(lambda t: ell(np.exp(t)) ** 2, edges, nodes=16)
    return n ** (1.0 - 4.0 * spec.beta) * spec.tau ** (-4.0) * val


@dataclass(frozen=True)
class FisherReport:
    """Fisher values plus scaling-regime metadata for one model spec."""
    n: int
    exact: float | None
    integral: float | None
    closed_form: float
    diamond: float
    regime: str
    rate_exponent: float
    log_factor: bool = False
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "exact": self.exact,
            "integral": self.integral,
            "closed_form": self.closed_form,
            "diamond": self.diamond,
            "regime": self.regime,
            "rate_exponent": self.rate_exponent,
            "log_factor": self.log_factor,
            "warnings": list(self.warnings),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _condition_warnings(spec: ModelSpec) -> list[str]:
    gap = spec.K - spec.alpha
    weak = max(spec.beta, (4.0 * spec.alpha + 1.0) * spec.beta)
    if gap <= weak:
        return ["K - alpha <= max(beta, (4 alpha + 1) beta): outside the "
                "validity range of the asymptotic formulas"]
    if gap <= 0.25 and not spec.is_critical:
        return ["K - alpha <= 1/4: asymptotics require the global Lipschitz "
                "bound on the signal spectral density"]
    return []


def _closed_form_subcritical(spec: ModelSpec) -> float:
    n = float(spec.n)
    dia = spec.diamond
    base = n ** (1.0 - dia * spec.beta) * spec.sigma ** (dia - 4.0) * spec.tau ** (-dia)
    if spec.x_cov.kind in ("fgn", "integrated_fbm_increment"):
        # ell * C_alpha collapses to Gamma(2H+1) sin(pi H) for this family,
        # removing the alpha = 0 singularity (continuous through H = 1/2)
        H = spec.x_cov.hurst
        amp = spec.x_cov.scale * gamma_fn(2.0 * H + 1.0) * math.sin(math.pi * H)
        return base * _phase_prefactor(dia) * amp ** (dia / 2.0)
    if spec.alpha == 0.0:
        raise DomainError("subcritical closed form requires alpha != 0 for "
                          "user-specified autocovariances")
    scale = spec.x_cov.scale
    ell_val = scale * spec.ell(n ** (dia * spec.beta))
    return base * ell_val ** (dia / 2.0) * closed_form_constant_C(dia, spec.alpha)


def _closed_form_critical(spec: ModelSpec) -> float:
    n = float(spec.n)
    scale = spec.x_cov.scale if spec.x_cov.kind == "user_sequence" else 1.0
    rho = spec.ell.rho if spec.ell.kind == "log_power" else 0.0
    c_eff = scale * spec.ell.c
    return (n ** (1.0 - 4.0 * spec.beta) * math.log(n) ** (2.0 * rho + 1.0)
            * spec.tau ** (-4.0) * (4.0 * spec.beta) ** (2.0 * rho + 1.0)
            / (2.0 * rho + 1.0) * c_eff ** 2)


def _closed_form_supercritical(spec: ModelSpec) -> float:
    return (float(spec.n) ** (1.0 - 4.0 * spec.beta) / (2.0 * spec.tau ** 4)
            * spec.sum_gamma_squared())


def fisher_closed_form(spec: ModelSpec) -> FisherReport:
    """Closed-form asymptotic Fisher information, dispatching on the
    characteristic diamond = 1/(K - alpha) across the phase transition at 4."""
    warnings = _condition_warnings(spec)
    dia = spec.diamond
    if spec.is_critical:
        regime, log_factor = REGIME_CRITICAL, True
        value = _closed_form_critical(spec)
        rate_exp = 1.0 - 4.0 * spec.beta
    elif dia < 4.0:
        regime, log_factor = REGIME_SUB, False
        value = _closed_form_subcritical(spec)
        rate_exp = 1.0 - dia * spec.beta
    else:
        regime, log_factor = REGIME_SUPER, False
        value = _closed_form_supercritical(spec)
        rate_exp = 1.0 - 4.0 * spec.beta
    if not spec.is_critical and abs(dia - 4.0) < 1e-3:
        warnings = warnings + [
            "diamond is within 1e-3 of the phase transition; the critical "
            f"formula would give {_closed_form_critical(spec):.6g}"]
    return FisherReport(
        n=spec.n, exact=None, integral=None, closed_form=float(value),
        diamond=float(dia), regime=regime, rate_exponent=float(rate_exp),
        log_factor=log_factor, warnings=tuple(warnings))


def fisher_report(spec: ModelSpec, methods=("exact", "integral", "closed-form"),
                  rtol: float = 1e-6) -> FisherReport:
    """Combined report; ``methods`` selects which of the three routes run."""
    report = fisher_closed_form(spec)
    exact = fisher_exact(spec) if "exact" in methods else None
    integral = fisher_integral(spec, rtol=rtol) if "integral" in methods else None
    closed = report.closed_form if "closed-form" in methods else None
    return FisherReport(
        n=spec.n, exact=exact, integral=integral,
        closed_form=closed if closed is not None else report.closed_form,
        diamond=report.diamond, regime=report.regime,
        rate_exponent=report.rate_exponent, log_factor=report.log_factor,
        warnings=report.warnings)


# ---------------------------------------------------------------------------
# rate scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateScan:
    """Per-n Fisher values over a grid plus fitted log-log slopes."""
    n_grid: tuple[int, ...]
    integral: tuple[float, ...]
    closed_form: tuple[float, ...]
    slope_integral: float
    slope_closed_form: float

    def rows(self):
        return list(zip(self.n_grid, self.integral, self.closed_form))

    def to_dict(self) -> dict:
        return {
            "n_grid": list(self.n_grid),
            "integral": list(self.integral),
            "closed_form": list(self.closed_form),
            "slope_integral": self.slope_integral,
            "slope_closed_form": self.slope_closed_form,
        }


def _loglog_slope(ns, vals) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(vals, dtype=float))
    a = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[1])


def rate_scan(spec: ModelSpec, n_grid, rtol: float = 1e-6) -> RateScan:
    """Evaluate the integral and closed-form Fisher over an increasing grid
    of sample sizes and fit the growth exponents."""
    n_grid = [int(v) for v in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])) or not n_grid:
        raise DomainError("n_grid must be strictly increasing and nonempty")
    ints, closeds = [], []
    for n in n_grid:
        sub = with_n(spec, n)
        ints.append(fisher_integral(sub, rtol=rtol))
        closeds.append(fisher_closed_form(sub).closed_form)
    return RateScan(
        n_grid=tuple(n_grid), integral=tuple(ints), closed_form=tuple(closeds),
        slope_integral=_loglog_slope(n_grid, ints),
        slope_closed_form=_loglog_slope(n_grid, closeds))
