"""Closed-form limit laws of the explosion asymptotics and their samplers.

Two distributions drive every scaling limit here:

* the renormalized overshoot law on [1, inf) with tail
  sin(a*pi)/pi * integral_0^1 u^(a-1) (z-u)^(-a) du, degenerating to the
  constant 1 at a = 1 and to +infinity at a = 0;
* the renormalized explosion-time law, fixed by its integer moments
  prod_k Gamma(k(b-a)+1)/Gamma(k(b-a)+a) (scaled by (c0(b-a))^-n), which is
  exponential at a = 0 and Weibull with shape 1/(1-a) when b = 1.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import DomainError

MGF_TERM_TOL = 1e-14
MGF_TERM_CAP = 10_000


def chi_tail(alpha, z):
    """P(overshoot ratio > z); 1 on (0, 1], quadrature beyond.

    The substitution u = w**(1/alpha) removes the endpoint singularity, so
    the integrand (z - w**(1/alpha))**(-alpha)/alpha is smooth on [0, 1]
    for z > 1.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    if not z > 0:
        raise DomainError("z must be > 0")
    if z <= 1.0:
        return 1.0
    if alpha == 0.0:
        return 1.0
    if alpha == 1.0:
        return 0.0
    val, _ = quad(lambda w: (z - w ** (1.0 / alpha)) ** -alpha, 0.0, 1.0,
                  epsabs=0.0, epsrel=1e-11, limit=200)
    return math.sin(alpha * math.pi) / math.pi * val / alpha


def chi_cdf(alpha, z):
    return 1.0 - chi_tail(alpha, z)


def chi_sample(alpha, rng, method="representation"):
    """One draw of the overshoot limit law, alpha strictly inside (0, 1).

    Default is the exact two-step representation B + (1-B) V**(-1/alpha)
    with B ~ Beta(alpha, 1-alpha) (Johnk) and V uniform: integrating the
    conditional Pareto tail against the Beta density reproduces chi_tail
    exactly.  method="invcdf" bisects chi_tail instead (slow; kept as the
    independent cross-check).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("degenerate endpoint: alpha must lie strictly in (0, 1)")
    if method == "representation":
        while True:
            x = rng.uniform() ** (1.0 / alpha)
            y = rng.uniform() ** (1.0 / (1.0 - alpha))
            if x + y <= 1.0:
                b = x / (x + y)
                break
        v = rng.uniform()
        return b + (1.0 - b) * v ** (-1.0 / alpha)
    if method == "invcdf":
        u = rng.uniform()
        lo, hi = 1.0, 2.0
        while chi_tail(alpha, hi) > u:
            lo, hi = hi, hi * 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if chi_tail(alpha, mid) > u:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-10 * lo:
                break
        return 0.5 * (lo + hi)
    raise DomainError(f"unknown method {method!r}")


def chi_laplace(alpha, a):
    """E[exp(-a chi)] by parts: exp(-a) - a * integral_1^inf exp(-a z) tail(z) dz."""
    if a < 0:
        raise DomainError("a must be >= 0")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie strictly in (0, 1)")
    if a == 0.0:
        return 1.0
    val, _ = quad(lambda z: math.exp(-a * z) * chi_tail(alpha, z), 1.0, math.inf,
                  epsabs=1e-14, epsrel=1e-10, limit=300)
    return math.exp(-a) - a * val


def _log_moment_ratio(alpha, beta, k):
    d = k * (beta - alpha)
    return gammaln(d + 1.0) - gammaln(d + alpha)


def rho_moment(alpha, beta, c0, n):
    """n-th moment of the explosion-time limit law.

    (c0 (beta-alpha))^-n  prod_{k<=n} Gamma(k(b-a)+1)/Gamma(k(b-a)+a);
    the n-th power on the prefactor is forced by the moment recursion
    b_k = k b_{k-1} / Psi(k(b-a)).
    """
    if not (beta > alpha >= 0.0):
        raise DomainError("need beta > alpha >= 0")
    if not c0 > 0:
        raise DomainError("c0 must be > 0")
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise DomainError("n must be a nonnegative integer")
    if n == 0:
        return 1.0
    acc = -n * math.log(c0 * (beta - alpha))
    for k in range(1, n + 1):
        acc += _log_moment_ratio(alpha, beta, k)
    return math.exp(acc)


def rho_mgf(alpha, beta, theta):
    """Moment generating function under the normalization c0 (beta-alpha) = 1.

    Partial sums truncated when a term drops below 1e-14 of the running sum
    (term ratio ~ theta (beta-alpha)^(1-alpha) n^-alpha keeps this safe
    inside |theta| < 1/beta).
    """
    if not (beta > alpha >= 0.0):
        raise DomainError("need beta > alpha >= 0")
    if not abs(theta) < 1.0 / beta:
        raise DomainError("theta outside the stated domain |theta| < 1/beta")
    if theta == 0.0:
        return 1.0
    total = 1.0
    term = 1.0
    for k in range(1, MGF_TERM_CAP + 1):
        term *= theta / k * math.exp(_log_moment_ratio(alpha, beta, k))
        total += term
        if abs(term) < MGF_TERM_TOL * abs(total):
            return total
    raise ArithmeticError("mgf series did not settle within the term cap")


def weibull_cdf(alpha, t):
    """CDF 1 - exp(-t^(1/(1-alpha))) of the beta = 1 explosion-time limit."""
    if not 0.0 <= alpha < 1.0:
        raise DomainError("alpha must lie in [0, 1)")
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise DomainError("t must be >= 0")
    out = -np.expm1(-t ** (1.0 / (1.0 - alpha)))
    return out if out.ndim else float(out)


def rho_ldp_rate(alpha, beta, c0):
    """Stretched-exponential tail rate (1-a) c0^(1/(1-a)) (b-a)^(a/(1-a))."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie strictly in (0, 1)")
    if not beta > alpha:
        raise DomainError("need beta > alpha")
    if not c0 > 0:
        raise DomainError("c0 must be > 0")
    return (1.0 - alpha) * c0 ** (1.0 / (1.0 - alpha)) \
        * (beta - alpha) ** (alpha / (1.0 - alpha))


def case1_limit_sample(alpha, beta, rng, tail_tol=1e-3):
    """One draw of the linear-speed limit: rho^(1/(beta-alpha)) / chi with
    the two factors independent; rho is drawn as the perpetual integral of
    a stable subordinator with c0 = 1/(beta-alpha) (the normalization under
    which the moment law matches the mgf)."""
    if not (0.0 < alpha <= 1.0):
        raise DomainError("alpha must lie in (0, 1]")
    if not beta > alpha:
        raise DomainError("need beta > alpha")
    if alpha == 1.0:
        return 1.0
    from . import csbp, mechanisms

    model = mechanisms.Model(
        mechanisms.StableSubordinator(c0=1.0 / (beta - alpha), alpha=alpha),
        mechanisms.RateFunction(1.0, beta), 1.0)
    rho = csbp.simulate_explosion(model, rng, tail_tol=tail_tol).t_inf_estimate
    chi = chi_sample(alpha, rng)
    return rho ** (1.0 / (beta - alpha)) / chi
