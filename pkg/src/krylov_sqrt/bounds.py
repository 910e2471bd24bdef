"""Error bounds for Arnoldi square-root (and inverse square-root) actions.

Two a posteriori bounds driven by the Ritz values of H_k, a closed-form
a priori bound in sigma_max(M) and k, sharpened Hermitian variants using
the averaged eigenvalue lambda_bar, the perturbed-matrix bound, and the
semi-infinite quadrature these need.  All Ritz products are accumulated
in log space so hundreds of factors neither overflow nor underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DivergentIntegral, DomainError, InvalidSpectrum, NonFiniteIntegrand
from .linalg import RitzSpectrum

# exp() underflows to zero below roughly -745; skip evaluating it there.
_LOG_UNDERFLOW = -745.0


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the semi-infinite bound integrals."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class QuadResult:
    """Quadrature value plus the achieved-error flag."""

    value: float
    estimated_error: float
    tolerance_met: bool


def gamma_fn(x: float) -> float:
    """Gamma function for positive real arguments."""
    if x <= 0:
        raise DomainError("gamma_fn requires a positive argument")
    return math.gamma(x)


def beta_fn(a: float, b: float) -> float:
    """Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b), in log space."""
    if a <= 0 or b <= 0:
        raise DomainError("beta_fn requires positive arguments")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def quad_semi_infinite(integrand, cfg: QuadratureConfig | None = None) -> QuadResult:
    """Adaptive Gauss-Kronrod integration of ``integrand`` over (0, inf).

    The change of variable x = t/(1-t) maps the half line onto (0, 1);
    the adaptive rule then refines wherever the transformed integrand is
    peaked.  Returns the best estimate with ``tolerance_met`` unset when
    the subdivision budget runs out before the tolerances are reached.
    """
    cfg = cfg or QuadratureConfig()

    def transformed(t: float) -> float:
        one_minus = 1.0 - t
        x = t / one_minus
        val = integrand(x)
        if not np.isfinite(val):
            raise NonFiniteIntegrand(f"integrand returned {val} at x = {x}")
        return val / (one_minus * one_minus)

    out = quad(
        transformed,
        0.0,
        1.0,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
        full_output=True,
    )
    value, est_err = float(out[0]), float(out[1])
    return QuadResult(value=value, estimated_error=est_err, tolerance_met=len(out) < 4)


def _ritz_values(ritz) -> np.ndarray:
    if isinstance(ritz, RitzSpectrum):
        return np.asarray(ritz.values, dtype=np.complex128)
    return np.asarray(ritz, dtype=np.complex128).ravel()


def bound_posterior_ritz(ritz, xi_norm: float, cfg: QuadratureConfig | None = None) -> float:
    """A posteriori bound (1/pi) * int_0^inf sqrt(x) prod_i |l_i/(l_i+x)| dx * xi.

    Needs k >= 2 (the integrand decays like x^{1/2-k}) and Ritz values in
    the open right half-plane.
    """
    lam = _ritz_values(ritz)
    if lam.size < 2:
        raise DivergentIntegral("posterior bound integral diverges for k < 2")
    if np.any(lam.real <= 0.0):
        raise InvalidSpectrum("all Ritz values must have positive real part")
    log_lam = np.log(np.abs(lam))

    def integrand(x: float) -> float:
        if x <= 0.0:
            return 0.0
        s = 0.5 * math.log(x) + float(np.sum(log_lam - np.log(np.abs(lam + x))))
        return math.exp(s) if s > _LOG_UNDERFLOW else 0.0

    return quad_semi_infinite(integrand, cfg).value / math.pi * xi_norm


def bound_posterior_modulus(ritz, xi_norm: float, cfg: QuadratureConfig | None = None) -> float:
    """Intermediate bound with |l_i|/sqrt(|l_i|^2 + x^2) in place of the
    exact factors; depends on the Ritz moduli only and dominates
    :func:`bound_posterior_ritz` pointwise."""
    lam = _ritz_values(ritz)
    if lam.size < 2:
        raise DivergentIntegral("modulus bound integral diverges for k < 2")
    mod2 = np.abs(lam) ** 2
    if np.any(mod2 == 0.0):
        raise InvalidSpectrum("all Ritz values must be nonzero")
    log_mod = 0.5 * np.log(mod2)

    def integrand(x: float) -> float:
        if x <= 0.0:
            return 0.0
        s = 0.5 * math.log(x) + float(np.sum(log_mod - 0.5 * np.log(mod2 + x * x)))
        return math.exp(s) if s > _LOG_UNDERFLOW else 0.0

    return quad_semi_infinite(integrand, cfg).value / math.pi * xi_norm


def bound_apriori_sqrt(sigma_max: float, k: int, xi_norm: float) -> float:
    """A priori bound G(3/4)/(2^{1/4} pi) * 2k/(2k-3) * sigma^{3/2} k^{-3/4} * xi."""
    if k < 2:
        raise DomainError("the a priori square-root bound requires k >= 2")
    if sigma_max <= 0 or xi_norm < 0:
        raise DomainError("sigma_max must be positive and xi_norm nonnegative")
    const = math.gamma(0.75) / (2.0 ** 0.25 * math.pi)
    return const * (2.0 * k / (2.0 * k - 3.0)) * sigma_max ** 1.5 * k ** -0.75 * xi_norm


def lambda_bar(top_eigs, lambda_max: float, k: int) -> float:
    """Averaged eigenvalue (sum of the k largest eigenvalues plus
    lambda_max) / (k+1); never exceeds lambda_max.

    Two usages: spectrum-known mode feeds the true top-k eigenvalues of M,
    computable mode feeds the Ritz values of H_k with a lambda_max
    estimate (no larger, by interlacing).
    """
    eigs = np.asarray(top_eigs, dtype=float).ravel()
    if eigs.size != k or k < 1:
        raise DomainError(f"expected {k} leading eigenvalues, got {eigs.size}")
    if np.any(eigs <= 0.0) or lambda_max <= 0.0:
        raise DomainError("eigenvalues must be positive")
    if np.any(np.diff(eigs) > 0.0):
        raise DomainError("top_eigs must be sorted in descending order")
    if lambda_max < eigs[0] * (1.0 - 1e-12):
        raise DomainError("lambda_max must dominate the leading eigenvalue")
    return float((eigs.sum() + lambda_max) / (k + 1.0))


def _hermitian_sqrt_bound(level: float, k: int, xi_norm: float) -> float:
    if k < 1:
        raise DomainError("Hermitian square-root bounds require k >= 1")
    if level <= 0 or xi_norm < 0:
        raise DomainError("spectral level must be positive and xi_norm nonnegative")
    const = 1.0 / (2.0 * math.sqrt(math.pi))
    return const * (2.0 * k / (2.0 * k - 1.0)) * level ** 1.5 * k ** -1.5 * xi_norm


def bound_hermitian_loose(lambda_max: float, k: int, xi_norm: float) -> float:
    """Hermitian bound 1/(2 sqrt(pi)) * 2k/(2k-1) * lambda_max^{3/2} k^{-3/2} * xi."""
    return _hermitian_sqrt_bound(lambda_max, k, xi_norm)


def bound_hermitian_jensen(lambda_bar_val: float, k: int, xi_norm: float) -> float:
    """Sharpened Hermitian bound with lambda_bar in place of lambda_max."""
    return _hermitian_sqrt_bound(lambda_bar_val, k, xi_norm)


def bound_apriori_invsqrt(sigma_max: float, k: int, xi_norm: float) -> float:
    """Inverse-square-root a priori bound
    G(1/4)/(2^{3/4} pi) * 2k/(2k-1) * sigma^{1/2} k^{-1/4} * xi."""
    if k < 1:
        raise DomainError("the inverse-square-root bound requires k >= 1")
    if sigma_max <= 0 or xi_norm < 0:
        raise DomainError("sigma_max must be positive and xi_norm nonnegative")
    const = math.gamma(0.25) / (2.0 ** 0.75 * math.pi)
    return const * (2.0 * k / (2.0 * k - 1.0)) * math.sqrt(sigma_max) * k ** -0.25 * xi_norm


def bound_hermitian_invsqrt(lambda_bar_val: float, k: int, xi_norm: float) -> float:
    """Hermitian inverse-square-root bound
    (1/sqrt(pi)) * (2k+2)/(2k+1) * lambda_bar^{1/2} (k+1)^{-1/2} * xi."""
    if k < 1:
        raise DomainError("the Hermitian inverse-square-root bound requires k >= 1")
    if lambda_bar_val <= 0 or xi_norm < 0:
        raise DomainError("lambda_bar must be positive and xi_norm nonnegative")
    return (
        (1.0 / math.sqrt(math.pi))
        * ((2.0 * k + 2.0) / (2.0 * k + 1.0))
        * math.sqrt(lambda_bar_val)
        * (k + 1.0) ** -0.5
        * xi_norm
    )


def bound_perturbed(
    sigma_max_M: float,
    mu1: float,
    mu2: float,
    eps: float,
    b_norm: float,
    k: int,
    xi_norm: float,
) -> float:
    """Two-term bound for running Arnoldi on a perturbed matrix.

    eps sigma_max(M)/(mu1+mu2) ||b||  +  (1+eps)^{3/2} times the a priori
    square-root bound.  xi_norm is the FOM error for the *perturbed*
    system (the Arnoldi process runs on the perturbed matrix).
    """
    if mu1 <= 0 or mu2 <= 0:
        raise DomainError("mu1 and mu2 must be positive")
    if eps < 0 or b_norm < 0:
        raise DomainError("eps and b_norm must be nonnegative")
    first = eps * sigma_max_M / (mu1 + mu2) * b_norm
    return first + (1.0 + eps) ** 1.5 * bound_apriori_sqrt(sigma_max_M, k, xi_norm)


def scaling_term(error_norm: float, xi_norm: float, k: int) -> float:
    """Error normalized by the a priori bound's constant:
    (2^{1/4} pi / G(3/4)) * (2k-3)/(2k) * error/xi.

    Its log-log slope against k (and against sigma_max) exposes the
    k^{-3/4} and sigma^{3/2} dependencies.
    """
    if k < 2:
        raise DomainError("scaling term requires k >= 2")
    if xi_norm <= 0 or error_norm < 0:
        raise DomainError("xi_norm must be positive and error_norm nonnegative")
    const = 2.0 ** 0.25 * math.pi / math.gamma(0.75)
    return const * ((2.0 * k - 3.0) / (2.0 * k)) * error_norm / xi_norm


@dataclass(frozen=True)
class BoundReport:
    """Per-iteration record of every applicable bound.

    posterior/a-priori fields are +inf at k = 1, where the bound
    integrals diverge; Hermitian fields stay None for non-Hermitian
    inputs, error_norm stays None without an oracle.
    """

    k: int
    residual_norm: float
    xi_norm: float
    sigma_max_used: float
    posterior_ritz: float
    posterior_modulus: float
    apriori_gamma: float
    error_norm: float | None = None
    hermitian_loose: float | None = None
    hermitian_jensen: float | None = None
    lambda_bar: float | None = None


def build_bound_report(
    k: int,
    ritz,
    residual_norm: float,
    xi_norm: float,
    sigma_max_used: float,
    cfg: QuadratureConfig | None = None,
    hermitian: bool = False,
    known_spectrum=None,
    lambda_max: float | None = None,
    error_norm: float | None = None,
) -> BoundReport:
    """Assemble a BoundReport from precomputed iteration quantities.

    For Hermitian inputs lambda_bar uses the true spectrum when
    ``known_spectrum`` (descending eigenvalues of M) is given, otherwise
    the computable Ritz-based mode with ``lambda_max`` (defaults to
    sigma_max_used, exact for Hermitian positive definite M).
    """
    if k >= 2:
        p_ritz = bound_posterior_ritz(ritz, xi_norm, cfg)
        p_mod = bound_posterior_modulus(ritz, xi_norm, cfg)
        gamma = bound_apriori_sqrt(sigma_max_used, k, xi_norm)
    else:
        p_ritz = p_mod = gamma = math.inf

    loose = jensen = lam_bar = None
    if hermitian:
        if known_spectrum is not None:
            eigs = np.sort(np.asarray(known_spectrum, dtype=float))[::-1]
            lam_max = float(eigs[0]) if lambda_max is None else lambda_max
            top = eigs[:k]
        else:
            lam_max = sigma_max_used if lambda_max is None else lambda_max
            vals = _ritz_values(ritz)
            top = np.sort(np.minimum(vals.real, lam_max))[::-1][:k]
        lam_bar = lambda_bar(top, lam_max, k)
        loose = bound_hermitian_loose(lam_max, k, xi_norm)
        jensen = bound_hermitian_jensen(lam_bar, k, xi_norm)

    return BoundReport(
        k=k,
        residual_norm=residual_norm,
        xi_norm=xi_norm,
        sigma_max_used=sigma_max_used,
        posterior_ritz=p_ritz,
        posterior_modulus=p_mod,
        apriori_gamma=gamma,
        error_norm=error_norm,
        hermitian_loose=loose,
        hermitian_jensen=jensen,
        lambda_bar=lam_bar,
    )
