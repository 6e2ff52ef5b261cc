"""Liouvillian-gap criticality of the driven-dissipative Kerr resonator."""

__version__ = "0.1.0"

from .model import ModelParams, FockOperator, annihilation_op, hamiltonian  # noqa: E402
from .cutoff import auto_cutoff  # noqa: E402
from .liouvillian import Superoperator, build_liouvillian, apply_liouvillian, time_evolve  # noqa: E402
from .steady import DensityMatrix, Observables, steady_state_numeric, analytic_moment, observables  # noqa: E402
from .semiclassical import steady_roots, bistability_edges, linear_response, integrate_meanfield  # noqa: E402
from .spectral import GapResult, liouvillian_gap, full_spectrum  # noqa: E402
from .wigner import GridSpec, WignerField, wigner, count_peaks  # noqa: E402
from .bosehubbard import BoseHubbardParams, k0_reduce  # noqa: E402
