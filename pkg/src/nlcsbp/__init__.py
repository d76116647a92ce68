"""Explosion of nonlinear continuous-state branching processes.

Evaluate the explosion criteria, compute the closed-form limit laws,
simulate explosion times and pre-explosion values of time-changed
spectrally positive Levy processes, and statistically verify the three
explosion-speed regimes at desk scale.
"""

from ._kernels import BACKEND, HAVE_COMPILED
from .csbp import (ExplosionSample, PreExplosionSample, classical_explosion_cdf,
                   cumulant_u, cumulant_u0, dynkin_test, eta_increment,
                   expected_eta_via_potential, pre_explosion_value,
                   simulate_explosion)
from .errors import (BudgetError, ConfigError, ContractError, DivergesError,
                     DomainError, HorizonError, NlcsbpError,
                     NonExplosiveError, UndecidedError)
from .experiments import (ExperimentReport, ks_statistic,
                          run_classical_cdf_experiment,
                          run_classification_suite, run_exit_experiment,
                          run_overshoot_experiment, run_regime_experiment,
                          run_rho_experiment)
from .levy_sim import (PathEvent, PathState, RngStream, first_passage_down,
                       next_event, simulate_until_level,
                       stable_positive_sample, tail_inverse_jump_sample)
from .limit_laws import (case1_limit_sample, chi_laplace, chi_sample, chi_tail,
                         rho_ldp_rate, rho_mgf, rho_moment, weibull_cdf)
from .mechanisms import (ConvergenceResult, LogCriticalSubordinator,
                         LogTailSubordinator, Model, NeveuMechanism,
                         PureDriftSubordinator, RateFunction, RegimeClass,
                         RegimeKind, StableMinusDrift, StableSubordinator,
                         classify_regime, explosion_energy,
                         explosion_test_stieltjes, phi_integral,
                         phi_integral_inverse, psi_eval, psi_largest_zero)

__version__ = "0.1.0"
