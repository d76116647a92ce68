"""Branching mechanisms, rate functions, and the explosion test integrals.

A mechanism represents the Laplace exponent psi of a spectrally positive
Levy process, psi(s) = log E[exp(-s xi(1))].  Five simulable families are
provided, chosen so that every explosion-speed regime has an exactly
simulable representative; a sixth analysis-only family (Neveu-type,
-psi(s) = s log(1/s)) exercises the critical divergent case in the integral
tests but cannot be simulated.

Conventions: for subordinator families psi <= 0 on [0, inf); the rate
function is the power law R(y) = kappa * y**beta; all test integrals are
evaluated after the substitution y = exp(u) so that slowly varying factors
become polynomial.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from . import _kernels
from .errors import DivergesError, DomainError

_E = math.e

# Defaults for the numerical dichotomies.  The integral tests of explosion
# are exact statements; a computer can only certify Cauchy behaviour, so a
# "diverged" verdict below is numerical, not proven.
ENERGY_REL_TOL = 1e-9
ENERGY_Y_CAP = 1e12
PHI_REL_TOL = 1e-8
PHI_INV_REL_TOL = 1e-10


# ---------------------------------------------------------------------------
# mechanism families


@dataclass(frozen=True)
class StableSubordinator:
    """psi(s) = -c0 * s**alpha, alpha in (0, 1)."""

    c0: float
    alpha: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise DomainError("c0 must be > 0")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")

    is_subordinator = True
    is_simulable = True

    @property
    def alpha_index(self):
        return self.alpha

    def psi(self, s):
        return -self.c0 * s ** self.alpha

    def _log_neg_psi(self, u):
        return math.log(self.c0) - self.alpha * u


@dataclass(frozen=True)
class PureDriftSubordinator:
    """psi(s) = -delta * s; deterministic linear paths."""

    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise DomainError("delta must be >= 0")

    is_subordinator = True
    is_simulable = True
    alpha_index = 1.0

    def psi(self, s):
        return -self.delta * s

    def _log_neg_psi(self, u):
        if self.delta == 0:
            raise DomainError("degenerate zero mechanism")
        return math.log(self.delta) - u


@dataclass(frozen=True)
class LogTailSubordinator:
    """Compound Poisson, jump tail (log(e+z))**-r, total rate 1.

    Slowly varying exponent: -psi(s) ~ (log 1/s)**-r as s -> 0.
    """

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("r must be > 0")

    is_subordinator = True
    is_simulable = True
    alpha_index = 0.0
    drift_eff = 0.0

    def nu_bar(self, z):
        return (np.log(_E + np.asarray(z, float))) ** (-self.r)

    @property
    def jump_rate(self):
        return 1.0

    def jump_quantile(self, u):
        # closed-form inverse of nu_bar/nu_bar(0+); exponent capped so the
        # result stays a finite float (cap is beyond any level of interest)
        ex = np.minimum(np.asarray(u, float) ** (-1.0 / self.r), 700.0)
        return np.exp(ex) - _E

    def psi(self, s):
        return -_neg_psi_quad(self.nu_bar, s)

    def _log_neg_psi(self, u):
        return math.log(_neg_psi_quad(self.nu_bar, math.exp(-min(u, 650.0))))

    def _jump_spec(self):
        return 1.0, _kernels.JUMP_LOGTAIL, np.array([self.r]), _EMPTY, _EMPTY


@dataclass(frozen=True)
class LogCriticalSubordinator:
    """Compound Poisson with tail plateau: the non-monotone raw tail
    (log(e+z))**gamma / (e+z) is flattened at its maximum gamma**gamma *
    exp(-gamma), reached at z = exp(gamma) - e, so the tail is a valid
    non-increasing function.  All jump mass sits above the plateau edge,
    hence the small-jump drift compensation for jumps below eps_cut is
    exactly zero.

    Critical index: -psi(s) ~ s * (log 1/s)**(gamma+1) / (gamma+1).
    """

    gamma: float
    eps_cut: float = 1e-3

    def __post_init__(self):
        if not self.gamma > 1:
            raise DomainError("gamma must be > 1")
        if not 0 < self.eps_cut < self.plateau_edge:
            raise DomainError("eps_cut must lie in (0, plateau edge)")

    is_subordinator = True
    is_simulable = True
    alpha_index = 1.0
    drift_eff = 0.0

    @property
    def plateau_height(self):
        return self.gamma ** self.gamma * math.exp(-self.gamma)

    @property
    def plateau_edge(self):
        return math.exp(self.gamma) - _E

    def _raw_tail(self, z):
        w = _E + np.asarray(z, float)
        return np.log(w) ** self.gamma / w

    def nu_bar(self, z):
        z = np.asarray(z, float)
        return np.where(z <= self.plateau_edge, self.plateau_height, self._raw_tail(z))

    @property
    def jump_rate(self):
        return self.plateau_height

    def jump_quantile(self, u):
        """u-quantile of the normalized jump law, by bisection on the
        decreasing branch of the tail beyond the plateau."""
        u = np.atleast_1d(np.asarray(u, float))
        lo = np.full(u.shape, self.plateau_edge)
        hi = np.full(u.shape, self.plateau_edge * 8 + 10)
        target = u * self.plateau_height
        grow = self._raw_tail(hi) > target
        while grow.any():
            hi[grow] *= 8
            grow = self._raw_tail(hi) > target
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            big = self._raw_tail(mid) > target
            lo[big] = mid[big]
            hi[~big] = mid[~big]
        out = 0.5 * (lo + hi)
        return out if out.size > 1 else float(out[0])

    def _log_nu_bar_logz(self, y):
        # log nu_bar(e^y), stable for any y
        ledge = math.log(self.plateau_edge)
        if y <= ledge:
            return math.log(self.plateau_height)
        lse = np.logaddexp(1.0, y)  # log(e + e^y)
        return self.gamma * math.log(lse) - lse

    def _log_P(self, u):
        """log of P(u) = -psi(s)/s at s = e^-u; P(u) ~ u^(gamma+1)/(gamma+1).

        P(u) = integral of exp(y - exp(y-u) + log nu_bar(e^y)) dy, the whole
        computation living in log coordinates so neither s nor z is formed.
        """
        def f(y):
            return math.exp(y - math.exp(y - u) + self._log_nu_bar_logz(y))

        ledge = math.log(self.plateau_edge)
        lo = ledge - 45.0
        hi = u + 6.0
        pts = sorted({lo, min(max(ledge, lo), hi), min(max(u, lo), hi), hi})
        val = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            if b > a:
                val += quad(f, a, b, epsabs=1e-300, epsrel=1e-11, limit=300)[0]
        return math.log(val)

    def psi(self, s):
        s = float(s)
        if s == 0.0:
            return 0.0
        return -math.exp(self._log_P(-math.log(s)) + math.log(s))

    def _log_neg_psi(self, u):
        return self._log_P(u) - u

    def _jump_spec(self):
        logu, logz = _logcritical_jump_table(self.gamma)
        return (self.plateau_height, _kernels.JUMP_TABLE, np.empty(0), logu, logz)


@dataclass(frozen=True)
class StableMinusDrift:
    """psi(s) = c*s - c0*s**alpha: spectrally positive, drifts to +infinity.

    The one non-subordinator family; p = (c0/c)**(1/(1-alpha)) is the
    largest zero of psi.
    """

    c0: float
    alpha: float
    c: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise DomainError("c0 must be > 0")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if self.c < 0:
            raise DomainError("c must be >= 0")

    is_simulable = True

    @property
    def is_subordinator(self):
        # the degenerate c = 0 case is a plain stable subordinator
        return self.c == 0.0

    @property
    def alpha_index(self):
        return self.alpha

    def psi(self, s):
        return self.c * s - self.c0 * s ** self.alpha

    def largest_zero_closed_form(self):
        if self.c == 0.0:
            return math.inf
        return (self.c0 / self.c) ** (1.0 / (1.0 - self.alpha))

    def _log_neg_psi(self, u):
        # valid for u > log(1/p) where psi(e^-u) < 0
        inner = self.c0 - self.c * math.exp(-(1.0 - self.alpha) * u)
        if inner <= 0:
            raise DomainError("psi(1/y) >= 0: y outside (1/p, inf)")
        return -self.alpha * u + math.log(inner)


@dataclass(frozen=True)
class NeveuMechanism:
    """-psi(s) = s*log(1/s) near 0 (psi(s) = s*log s); analysis only.

    The canonical critical example whose explosion integral diverges for
    R(y) = y; not simulable by the event engines.
    """

    is_subordinator = False
    is_simulable = False
    alpha_index = 1.0

    def psi(self, s):
        s = np.asarray(s, float)
        out = np.where(s > 0, s * np.log(np.maximum(s, 1e-320)), 0.0)
        return out if out.ndim else float(out)

    def largest_zero_closed_form(self):
        return 1.0

    def _log_neg_psi(self, u):
        if u <= 0:
            raise DomainError("psi(1/y) >= 0: y outside (1/p, inf)")
        return -u + math.log(u)


_EMPTY = np.empty(0)

MECHANISM_FAMILIES = (
    StableSubordinator,
    PureDriftSubordinator,
    LogTailSubordinator,
    LogCriticalSubordinator,
    StableMinusDrift,
)


@lru_cache(maxsize=16)
def _logcritical_jump_table(gamma):
    """Log-log quantile table of the jump law for the batch engines."""
    mech = LogCriticalSubordinator(gamma)
    ug = np.geomspace(1e-22, 1.0, 1200)
    zg = mech.jump_quantile(ug)
    return np.log(ug), np.log(zg)


def _neg_psi_quad(nu_bar, s):
    """-psi(s) = integral of exp(-w) nu_bar(w/s) dw, by quadrature in log w.

    This is the tail-integral form of the Levy-Khintchine integral
    (integration by parts of 1 - exp(-s z) against nu).
    """
    s = float(s)
    if s == 0.0:
        return 0.0

    def f(x):
        return math.exp(x - math.exp(x)) * float(nu_bar(math.exp(x) / s))

    val = 0.0
    for a, b in ((-75.0, -5.0), (-5.0, 0.0), (0.0, 6.0)):
        val += quad(f, a, b, epsabs=1e-300, epsrel=1e-11, limit=200)[0]
    return val


# ---------------------------------------------------------------------------
# rate function and model


@dataclass(frozen=True)
class RateFunction:
    """R(y) = kappa * y**beta: positive, strictly increasing, index beta."""

    kappa: float
    beta: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("kappa must be > 0")
        if not self.beta > 0:
            raise DomainError("beta must be > 0")

    def __call__(self, y):
        return self.kappa * np.asarray(y, float) ** self.beta

    def derivative(self, y):
        return self.kappa * self.beta * np.asarray(y, float) ** (self.beta - 1.0)


@dataclass(frozen=True)
class Model:
    """One nonlinear branching-process instance: (mechanism, rate, x0)."""

    mechanism: object
    rate: RateFunction
    x0: float

    def __post_init__(self):
        if not self.x0 > 0:
            raise DomainError("x0 must be > 0")

    @property
    def alpha(self):
        return self.mechanism.alpha_index

    @property
    def beta(self):
        return self.rate.beta


# ---------------------------------------------------------------------------
# results of numerical dichotomies


@dataclass(frozen=True)
class ConvergenceResult:
    """Numerical verdict on an improper integral (certified Cauchy behaviour,
    not a proof)."""

    converged: bool
    value: Optional[float]
    upper_limit_used: float
    error_estimate: float


class RegimeKind(enum.Enum):
    NON_EXPLOSIVE_ALPHA_GT_BETA = "non-explosive"
    CRITICAL_EQUAL_INDICES = "critical"
    EXPLOSIVE_BETA_GT_ALPHA = "explosive"


@dataclass(frozen=True)
class RegimeClass:
    kind: RegimeKind
    critical_explosive: Optional[bool] = None

    @property
    def is_explosive(self):
        if self.kind is RegimeKind.EXPLOSIVE_BETA_GT_ALPHA:
            return True
        if self.kind is RegimeKind.CRITICAL_EQUAL_INDICES:
            return bool(self.critical_explosive)
        return False


# ---------------------------------------------------------------------------
# operations


def psi_eval(mech, s):
    """psi(s) for s >= 0; exactly 0 at s = 0."""
    if np.any(np.asarray(s) < 0):
        raise DomainError("s must be >= 0")
    if np.isscalar(s) or np.asarray(s).ndim == 0:
        return 0.0 if float(s) == 0.0 else float(mech.psi(float(s)))
    s = np.asarray(s, float)
    return np.array([0.0 if v == 0.0 else float(mech.psi(v)) for v in s])


def psi_largest_zero(mech):
    """p = inf{s > 0 : psi(s) > 0}; +inf for every subordinator family."""
    if mech.is_subordinator:
        return math.inf
    closed = mech.largest_zero_closed_form()
    if isinstance(mech, NeveuMechanism):
        return closed
    lo, hi = 1e-12, 1.0
    while mech.psi(hi) <= 0:
        hi *= 2.0
        if hi > 1e18:
            raise DomainError("no sign change found for largest zero")
    root = brentq(mech.psi, lo, hi, xtol=1e-300, rtol=1e-15)
    if abs(root - closed) > 1e-12 * closed:
        raise ArithmeticError(
            f"root finder ({root}) disagrees with closed form ({closed})")
    return closed


def _log_integrand(model, u):
    """Integrand of the tail integral in u = log y coordinates:
    exp(u) * (-1) / (y R(y) psi(1/y)) at y = exp(u)."""
    r = model.rate
    return math.exp(-math.log(r.kappa) - r.beta * u - model.mechanism._log_neg_psi(u))


def _x_lo(model):
    p = psi_largest_zero(model.mechanism)
    return 1.0 if math.isinf(p) else 2.0 / p


def phi_integral(model, x):
    """phi(x): tail integral of 1/(y R(y) (-psi(1/y))) from x to infinity."""
    p = psi_largest_zero(model.mechanism)
    if not x > 1.0 / p:
        raise DomainError("x must exceed 1/p")
    if not classify_regime(model).is_explosive:
        raise DivergesError("phi is infinite for a non-explosive model")
    u_lo = math.log(x)
    val, _ = quad(lambda u: _log_integrand(model, u), u_lo, math.inf,
                  epsabs=1e-300, epsrel=PHI_REL_TOL, limit=400)
    return val


def phi_integral_inverse(model, t):
    """x with phi(x) = t, by monotone bisection on a geometrically grown
    bracket; the round trip satisfies |phi(x) - t| <= 1e-10 * t."""
    if not t > 0:
        raise DomainError("t must be > 0")
    p = psi_largest_zero(model.mechanism)
    base = 0.0 if math.isinf(p) else 1.0 / p
    x_lo = _x_lo(model)
    # bracket [lo, hi] with phi(lo) >= t >= phi(hi); phi is decreasing and
    # blows up at base+, vanishes at infinity, so a bracket always exists
    if phi_integral(model, x_lo) >= t:
        lo, hi = x_lo, 2.0 * x_lo
        while phi_integral(model, hi) > t:
            lo, hi = hi, hi * 2.0
            if hi > 1e280:
                raise DomainError("t outside the range of phi")
    else:
        hi = x_lo
        lo = base + (x_lo - base) * 0.5
        while phi_integral(model, lo) < t:
            hi = lo
            lo = base + (lo - base) * 0.5
            if lo - base < 1e-280:
                raise DomainError("t outside the range of phi")
    for _ in range(200):
        mid = base + math.sqrt((lo - base) * (hi - base))
        if phi_integral(model, mid) > t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(lo, 1e-300):
            break
    x = 0.5 * (lo + hi)
    for _ in range(60):
        err = phi_integral(model, x) - t
        if abs(err) <= PHI_INV_REL_TOL * t:
            break
        slope = -_log_integrand(model, math.log(x)) / x
        x = min(max(x - err / slope, lo), hi)
    return x


def _tail_quad_attempt(integrand_u, u_lo):
    """Try the remaining tail on (u_lo, inf); None when it does not converge.

    Adaptive quadrature converges exactly on integrable tails; a divergent
    or growing integrand shows up as a warning, an appended message, or a
    large error estimate.
    """
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        try:
            out = quad(integrand_u, u_lo, math.inf,
                       epsabs=1e-300, epsrel=1e-9, limit=400, full_output=1)
        except Warning:
            return None
    val, err = out[0], out[1]
    if len(out) > 3 or not math.isfinite(val) or err > 1e-6 * abs(val):
        return None
    return val, err


def _doubling_verdict(integrand_u, u_lo, rel_tol, y_cap):
    """Doubling-upper-limit dichotomy on the integral from exp(u_lo) to
    infinity: converged when successive partials differ by < rel_tol before
    the limit exceeds y_cap; otherwise an explicit tail quadrature settles
    slowly converging (log-power) cases."""
    u = u_lo
    total = 0.0
    upper = math.exp(u_lo)
    rel = math.inf
    while upper < y_cap:
        u_next = u + math.log(2.0)
        seg, _ = quad(integrand_u, u, u_next, epsabs=1e-300, epsrel=1e-10, limit=200)
        prev = total
        total += seg
        u = u_next
        upper *= 2.0
        if prev > 0:
            rel = (total - prev) / total
            if rel < rel_tol:
                tail = _tail_quad_attempt(integrand_u, u)
                if tail is not None:
                    return ConvergenceResult(True, total + tail[0], upper, rel)
                return ConvergenceResult(True, total, upper, rel)
    tail = _tail_quad_attempt(integrand_u, u)
    if tail is not None:
        val = total + tail[0]
        return ConvergenceResult(True, val, upper, tail[1] / val)
    return ConvergenceResult(False, None, upper, rel)


def explosion_energy(model):
    """Numerical verdict on the explosion test integral (finite iff the
    process can explode, given equal indices)."""
    u_lo = math.log(_x_lo(model))
    return _doubling_verdict(lambda u: _log_integrand(model, u), u_lo,
                             ENERGY_REL_TOL, ENERGY_Y_CAP)


def explosion_test_stieltjes(model):
    """Same dichotomy via the Stieltjes form with d(-1/R): integrand
    (-1/psi(1/y)) R'(y)/R(y)^2."""
    r = model.rate

    def integrand_u(u):
        # e^u * R'(e^u)/R(e^u)^2 = beta / (kappa e^{beta u})
        return math.exp(math.log(r.beta) - math.log(r.kappa) - r.beta * u
                        - model.mechanism._log_neg_psi(u))

    u_lo = math.log(_x_lo(model))
    return _doubling_verdict(integrand_u, u_lo, ENERGY_REL_TOL, ENERGY_Y_CAP)


@lru_cache(maxsize=256)
def classify_regime(model):
    """Three-way classification by the declared indices; the critical case
    carries the numerical verdict on the test integral."""
    a, b = model.alpha, model.beta
    if a > b:
        return RegimeClass(RegimeKind.NON_EXPLOSIVE_ALPHA_GT_BETA)
    if a == b:
        return RegimeClass(RegimeKind.CRITICAL_EQUAL_INDICES,
                           critical_explosive=explosion_energy(model).converged)
    return RegimeClass(RegimeKind.EXPLOSIVE_BETA_GT_ALPHA)


# ---------------------------------------------------------------------------
# cached phi table for the batch engines


class PhiTable:
    """Monotone log-log interpolant of phi with inverse; exact for the
    stable family (phi is a pure power there), quadrature-built otherwise."""

    def __init__(self, logx, logphi):
        self.logx = np.asarray(logx)
        self.logphi = np.asarray(logphi)
        self._interp = PchipInterpolator(self.logx, self.logphi)

    def __call__(self, x):
        lx = np.clip(np.log(np.asarray(x, float)), self.logx[0], self.logx[-1])
        out = np.exp(self._interp(lx))
        return out if out.ndim else float(out)

    def inverse(self, t):
        lt = math.log(t)
        if not self.logphi[-1] <= lt <= self.logphi[0]:
            raise DomainError("t outside the tabulated range of phi")
        lx = brentq(lambda v: self._interp(v) - lt, self.logx[0], self.logx[-1])
        return math.exp(lx)


@lru_cache(maxsize=32)
def phi_table(model, x_lo=None, x_hi=1e13, npts=140):
    """Build the cached PhiTable spanning [x_lo, x_hi]."""
    mech = model.mechanism
    r = model.rate
    if x_lo is None:
        x_lo = min(model.x0 * 0.5, _x_lo(model))
        p = psi_largest_zero(mech)
        if not math.isinf(p):
            # phi blows up at 1/p: keep the table strictly inside the domain
            x_lo = max(x_lo, 1.02 / p)
    if isinstance(mech, StableSubordinator):
        # phi(x) = x^(alpha-beta) / (kappa c0 (beta-alpha)): exact 2-point table
        lx = np.array([math.log(x_lo), math.log(x_hi)])
        lc = -math.log(r.kappa * mech.c0 * (r.beta - mech.alpha))
        return PhiTable(lx, lc + (mech.alpha - r.beta) * lx)
    xs = np.geomspace(x_lo, x_hi, npts)
    f = lambda u: _log_integrand(model, u)
    tail, _ = quad(f, math.log(xs[-1]), math.inf,
                   epsabs=1e-300, epsrel=1e-9, limit=400)
    vals = np.empty(npts)
    vals[-1] = tail
    for i in range(npts - 2, -1, -1):
        seg, _ = quad(f, math.log(xs[i]), math.log(xs[i + 1]),
                      epsabs=1e-300, epsrel=1e-9, limit=200)
        vals[i] = vals[i + 1] + seg
    return PhiTable(np.log(xs), np.log(vals))


@lru_cache(maxsize=32)
def psi_table(mech, s_lo, s_hi, npts=400):
    """Monotone log-log interpolant of -psi on [s_lo, s_hi] for batch
    statistics; accuracy is set by the quadrature backing each node."""
    sg = np.geomspace(s_lo, s_hi, npts)
    vals = np.array([-psi_eval(mech, s) for s in sg])
    interp = PchipInterpolator(np.log(sg), np.log(vals))

    def neg_psi(s):
        ls = np.clip(np.log(np.asarray(s, float)), math.log(s_lo), math.log(s_hi))
        out = np.exp(interp(ls))
        return out if out.ndim else float(out)

    return neg_psi
