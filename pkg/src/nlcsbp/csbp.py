"""The time change: explosion times, pre-explosion values, and the
closed-form layer available when the rate is linear (classical branching).

The explosion time equals the perpetual integral of 1/R along the parent
path.  Simulation truncates the path when the expected residual integral,
bounded through the tail-integral function phi and the first-moment
asymptotics (coefficient Gamma(beta-alpha+1)/Gamma(beta) for beta > alpha,
1/Gamma(alpha) at equal indices, widened by a x4 margin), drops below
tail_tol times the accumulated value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .errors import (BudgetError, ContractError, DivergesError, DomainError,
                     NonExplosiveError)
from .levy_sim import PathState, next_event
from .mechanisms import (LogCriticalSubordinator, LogTailSubordinator,
                         PureDriftSubordinator, StableMinusDrift,
                         StableSubordinator, classify_regime, phi_table,
                         psi_eval)

RESIDUAL_MARGIN = 4.0
ETA_Q_STEP = 0.05


def residual_coefficient(alpha, beta):
    """Leading coefficient of the mean residual integral from level y,
    relative to phi(y)."""
    if beta > alpha:
        return gamma_fn(beta - alpha + 1.0) / gamma_fn(beta)
    if beta == alpha:
        return 1.0 / gamma_fn(alpha)
    raise DomainError("residual asymptotics need beta >= alpha")


@dataclass(frozen=True)
class ExplosionSample:
    t_inf_estimate: float
    tail_bound: float
    events_used: int
    final_level: float


@dataclass(frozen=True)
class PreExplosionSample:
    t: float
    x_value: float
    renormalized: float


def eta_increment(rate, level0, slope, dt):
    """integral_0^dt ds / R(level0 + slope*s) in closed form (power-law R).

    dt may be inf when slope > 0 and the tail converges (beta > 1).
    """
    if not level0 > 0:
        raise DomainError("level0 must be > 0")
    kappa, beta = rate.kappa, rate.beta
    if math.isinf(dt):
        if slope <= 0:
            raise DomainError("infinite horizon needs positive slope")
        if beta <= 1.0:
            raise DivergesError("integral of 1/R diverges for beta <= 1")
        return level0 ** (1.0 - beta) / (kappa * slope * (beta - 1.0))
    if not dt >= 0:
        raise DomainError("dt must be >= 0")
    end = level0 + slope * dt
    if end <= 0:
        raise DomainError("segment hits zero")
    if slope == 0.0:
        return dt / (kappa * level0 ** beta)
    if beta == 1.0:
        return math.log(end / level0) / (kappa * slope)
    return (end ** (1.0 - beta) - level0 ** (1.0 - beta)) \
        / (kappa * slope * (1.0 - beta))


def _require_explosive(model):
    regime = classify_regime(model)
    if not regime.is_explosive:
        raise ContractError("model is not explosive")
    return regime


def _eta_grid_dt(mech, value, q_step):
    # increment scale tracks the current value so the relative cell growth
    # is uniform (geometric time grid, fine near t = 0)
    return (q_step * value) ** mech.alpha / mech.c0


def _simulate_eta_path(model, rng, tail_tol, max_events, q_step, t_floor,
                       record=None):
    """Shared explosion loop; returns (eta, events, final value, tail bound).

    Stops when RESIDUAL_MARGIN * c1 * phi(v) <= tail_tol * min(eta, t_floor)
    (t_floor = inf when no lookback is required).  ``record`` collects
    (eta_before, value, slope, dt, charge) segments.
    """
    mech, rate, x0 = model.mechanism, model.rate, model.x0
    c1 = residual_coefficient(model.alpha, model.beta)
    phi = phi_table(model)
    state = PathState(0.0, float(x0), 0.0)
    eta = 0.0
    events = 0
    while True:
        if events >= max_events:
            raise BudgetError("event budget exhausted before the stopping rule",
                              events=events, state=state)
        if isinstance(mech, (LogTailSubordinator, LogCriticalSubordinator)):
            grid_dt = 0.0
        else:
            grid_dt = _eta_grid_dt(mech, state.value, q_step)
        prev = state
        state, ev = next_event(mech, state, grid_dt, rng)
        events += 1
        if state.value <= 0 or ev.pre_value <= 0:
            # extinction (the drift part can die mid-cell); rejected upstream
            return None, events, state.value, math.nan
        dt = ev.t_event - prev.time
        if ev.kind.name == "JUMP":
            charge = eta_increment(rate, prev.value, mech.drift_eff, dt)
        else:
            # trapezoid across the cell: exact in expectation when a single
            # jump dominates the cell (the jump time is uniform within it)
            charge = dt * 0.5 * (1.0 / float(rate(prev.value))
                                 + 1.0 / float(rate(state.value)))
        if record is not None:
            record.append((eta, prev.value, dt, charge))
        eta += charge
        pv = float(phi(state.value))
        if (RESIDUAL_MARGIN * c1 * pv <= tail_tol * eta
                and RESIDUAL_MARGIN * c1 * pv <= tail_tol * t_floor):
            return eta, events, state.value, RESIDUAL_MARGIN * c1 * pv


def simulate_explosion(model, rng, tail_tol=1e-3, max_events=10 ** 7,
                       q_step=ETA_Q_STEP):
    """One Monte Carlo draw of the explosion time with its residual bound.

    Pure-drift parents are deterministic and use the closed form; paths of
    the stable-minus-drift family that die at 0 are rejected and resampled
    (conditioning on non-extinction).
    """
    _require_explosive(model)
    mech = model.mechanism
    if isinstance(mech, PureDriftSubordinator):
        t_inf = eta_increment(model.rate, model.x0, mech.delta, math.inf)
        return ExplosionSample(t_inf, 0.0, 0, math.inf)
    while True:
        out = _simulate_eta_path(model, rng, tail_tol, max_events, q_step,
                                 math.inf)
        eta, events, final_level, tail_bound = out
        if eta is not None:
            return ExplosionSample(eta, tail_bound, events, final_level)
        if not isinstance(mech, StableMinusDrift):
            raise ContractError("subordinator path reported extinction")


def pre_explosion_value(model, t, rng, tail_tol=1e-3, max_events=10 ** 7,
                        q_step=ETA_Q_STEP):
    """X at lookback t before explosion, with its regime renormalization.

    The horizon extends until the residual bound is below tail_tol * t, so
    the lookback instant lies inside the resolved path; the target uses the
    mean-residual-corrected total (the correction is below tail_tol * t/4).
    When t >= the whole explosion time the boundary convention X = x0
    applies (excluded from experiment statistics).
    """
    if not t > 0:
        raise DomainError("t must be > 0")
    _require_explosive(model)
    mech, rate, x0 = model.mechanism, model.rate, model.x0
    if isinstance(mech, PureDriftSubordinator):
        t_inf = eta_increment(rate, x0, mech.delta, math.inf)
        if t >= t_inf:
            return PreExplosionSample(t, x0, math.nan)
        x = (rate.kappa * mech.delta * (rate.beta - 1.0) * t) \
            ** (1.0 / (1.0 - rate.beta))
        return PreExplosionSample(t, x, _renormalize(model, t, x))
    c1 = residual_coefficient(model.alpha, model.beta)
    phi = phi_table(model)
    while True:
        record = []
        out = _simulate_eta_path(model, rng, tail_tol, max_events, q_step, t,
                                 record=record)
        eta, events, final_level, tail_bound = out
        if eta is not None:
            break
        if not isinstance(mech, StableMinusDrift):
            raise ContractError("subordinator path reported extinction")
    eta_est = eta + c1 * float(phi(final_level))
    target = eta_est - t
    if target <= 0:
        # boundary convention: the whole explosion happened within the
        # lookback window; no renormalization applies
        return PreExplosionSample(t, x0, math.nan)
    x = None
    for eta_before, value, dt, charge in record:
        if eta_before < target <= eta_before + charge:
            x = value  # piecewise-constant segment reading
            break
    if x is None:
        x = final_level
    return PreExplosionSample(t, x, _renormalize(model, t, x))


def _renormalize(model, t, x):
    phi = phi_table(model)
    if model.alpha == 0.0:
        xi = phi.inverse(t)
        return psi_eval(model.mechanism, 1.0 / xi) / psi_eval(model.mechanism, 1.0 / x)
    if model.alpha == model.beta:
        return x / phi.inverse(gamma_fn(model.alpha) * t)
    return x / phi.inverse(t)


# ---------------------------------------------------------------------------
# classical layer (linear rate): cumulants and the explosion-time CDF


def _check_cumulant_mech(mech):
    if not (mech.is_subordinator or isinstance(mech, PureDriftSubordinator)):
        raise DomainError("cumulant solver expects a subordinator-type mechanism")


def cumulant_u(mech, lam, t):
    """u_t(lambda) solving integral_{u_t}^{lambda} du/psi(u) = t; closed form
    for the stable and linear families, monotone bisection otherwise."""
    _check_cumulant_mech(mech)
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0.0:
        return float(lam)
    if isinstance(mech, StableSubordinator):
        a = mech.alpha
        return (lam ** (1.0 - a) + mech.c0 * (1.0 - a) * t) ** (1.0 / (1.0 - a))
    if isinstance(mech, PureDriftSubordinator):
        return lam * math.exp(mech.delta * t)
    def g(u_hi):
        val, _ = quad(lambda v: 1.0 / -psi_eval(mech, v), lam, u_hi,
                      epsabs=1e-13, epsrel=1e-11, limit=200)
        return val
    lo, hi = lam, 2.0 * lam
    while g(hi) < t:
        lo, hi = hi, hi * 2.0
        if hi > 1e280:
            raise DomainError("cumulant exceeded the floating range")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if g(mid) < t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * lo:
            break
    return 0.5 * (lo + hi)


def dynkin_test(mech):
    """Verdict on the integral of 1/|psi| near 0 (finite iff the linear-rate
    process explodes), with the lower limit shrinking geometrically."""
    from .mechanisms import ConvergenceResult, _tail_quad_attempt

    def f(v):
        return 1.0 / abs(psi_eval(mech, v))

    hi = 0.5
    lo = hi
    total = 0.0
    rel = math.inf
    while lo > 1e-12:
        nxt = lo * 0.1
        seg, _ = quad(f, nxt, lo, epsabs=1e-300, epsrel=1e-10, limit=200)
        prev = total
        total += seg
        lo = nxt
        if prev > 0:
            rel = (total - prev) / total
            if rel < 1e-6:
                break
    # remaining piece (0, lo) via v = exp(-w), with the integrand kept in
    # log form so v never underflows inside psi
    tail = _tail_quad_attempt(
        lambda w: math.exp(-w - mech._log_neg_psi(w)), -math.log(lo))
    if tail is None:
        return ConvergenceResult(False, None, lo, rel)
    return ConvergenceResult(True, total + tail[0], lo, rel)


def cumulant_u0(mech, t):
    """u_t(0+) solving integral_0^{u} dv/(-psi(v)) = t (stable closed form);
    requires the near-zero integral to converge."""
    _check_cumulant_mech(mech)
    if not t > 0:
        raise DomainError("t must be > 0")
    if isinstance(mech, StableSubordinator):
        a = mech.alpha
        return (mech.c0 * (1.0 - a) * t) ** (1.0 / (1.0 - a))
    verdict = dynkin_test(mech)
    if not verdict.converged:
        raise NonExplosiveError("integral of 1/|psi| diverges at 0: u_t(0+) = 0")

    def g0(u_hi):
        # integral_0^{u_hi} dv/(-psi(v)) via v = exp(-w)
        val, _ = quad(lambda w: math.exp(-w) / -psi_eval(mech, math.exp(-w)),
                      -math.log(u_hi), 60.0, epsabs=1e-300, epsrel=1e-9,
                      limit=300)
        return val

    lo, hi = 1e-12, 1.0
    while g0(hi) < t:
        lo, hi = hi, hi * 2.0
        if hi > 1e280:
            raise DomainError("cumulant exceeded the floating range")
    while g0(lo) > t:
        hi, lo = lo, lo * 0.5
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if g0(mid) < t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * lo:
            break
    return 0.5 * (lo + hi)


def classical_explosion_cdf(mech, x, t):
    """P(explosion by time t from x) = 1 - exp(-x u_t(0+)) for subordinator
    parents with linear rate (explosion is then almost sure)."""
    if not mech.is_subordinator:
        raise DomainError("closed-form CDF requires a subordinator parent")
    if not x > 0:
        raise DomainError("x must be > 0")
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0.0:
        return 0.0
    return -math.expm1(-x * cumulant_u0(mech, t))


def expected_eta_via_potential(alpha, beta, c0):
    """Exact mean explosion time from 1 for the stable parent and power
    rate, via the potential measure: integral of (1+y)^-beta y^(alpha-1)
    dy / (c0 Gamma(alpha)).  Evaluated by quadrature (the independent route;
    it equals Gamma(beta-alpha)/(c0 Gamma(beta)))."""
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must lie strictly in (0, 1)")
    if not beta > alpha:
        raise DomainError("need beta > alpha")
    if not c0 > 0:
        raise DomainError("c0 must be > 0")
    # y = w^(1/alpha) removes the endpoint singularity on [0, 1]
    head, _ = quad(lambda w: (1.0 + w ** (1.0 / alpha)) ** -beta, 0.0, 1.0,
                   epsabs=0.0, epsrel=1e-11, limit=200)
    tail, _ = quad(lambda y: (1.0 + y) ** -beta * y ** (alpha - 1.0), 1.0,
                   math.inf, epsabs=1e-14, epsrel=1e-11, limit=200)
    return (head / alpha + tail) / (c0 * gamma_fn(alpha))
