"""Reversion probabilistic zero forcing: exact Markov-chain analysis, closed forms,
Monte Carlo simulation and mean-field recursions."""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (BracketError, ConsistencyError, DomainError, IncompatibilityError,
                     NumericalError, ParseError, RPZFError, SingularityError, SizeError)
from .graph import Graph, family, from_edge_list, parse_family
from .statespace import (StateSpace, collapsed_bipartite, collapsed_complete, collapsed_for,
                         collapsed_star, enumerate_full)
from .chain import (TransitionBundle, Variant, build_bundle, build_forcing, build_reversion,
                    force_probability, step_distribution)
from .analysis import (AbsorptionReport, absorption_probabilities, analyze,
                       critical_reversion_probability, die_out_curve,
                       expected_absorption_times, fundamental_matrix,
                       pzf_expected_propagation_time)
