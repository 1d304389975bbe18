"""Positive bound states of semiclassical logarithmic Schrodinger equations
with potentials that may be unbounded below, via a penalized variational
scheme with a-posteriori recovery of the original equation."""

from .analysis import (DecayFit, LimitProfile, auto_gauge_constant, barycenter,
                       decay_fit, gauge_shift, limit_profile,
                       locate_concentration, m_level, profile_distance)
from .errors import (BadEndpoint, ConfigError, DomainError, EmptyAnnulus,
                     ExprSyntaxError, LogboundError, NoBracket, NoConvergence,
                     TrivialCollapse, UnknownIdentifier, ZeroMass)
from .functional import (EnergyBreakdown, ProblemSpec, energy,
                         energy_original_gauge, gradient, h_eps_norm,
                         residual_original, residual_penalized, unshift)
from .grid import (Field, Grid, field_from_binary, field_from_csv,
                   field_from_function, field_to_binary, field_to_csv,
                   gaussian_field, integrate, inner, laplacian, solve_shifted,
                   zeros_like)
from .penalty import (BallDomain, BoxDomain, F_pen, G_cut, PenaltyConfig,
                      eta, eta_dt, eta_hat, f_pen, g_cut, phi, psi_penalty,
                      psi_prime_apply, v_bar, v_tilde)
from .potentials import (CompetingPotential, ConstantPotential,
                         HarmonicRepulsive, LocalMinUnbounded, Potential,
                         PotentialExpr, SaddleUnbounded, ShiftedPotential,
                         builtin_potential, eval_potential, grad_potential,
                         parse_potential)
from .solve import (SolveOptions, SolveReport, continuation_sweep,
                    mountain_pass_level, nehari_scale, saddle_minmax,
                    solve_critical)
from .validation import CheckResult, run_validation

__version__ = "0.1.0"
