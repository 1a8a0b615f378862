"""Security analysis of BB84 against individual eavesdropping attacks.

Submodules: :mod:`.quantum` (states and generalized measurements),
:mod:`.attacks` (attack operator families), :mod:`.metrics` (information
and disturbance), :mod:`.bounds` (closed-form bounds), :mod:`.optimizer`
(numerical validity/sharpness checks), :mod:`.protocol` (Monte Carlo
sessions) and :mod:`.cli`.
"""

from .attacks import (
    AttackStrategy,
    CanonicalAttackOp,
    SymmetricAttackOp,
    build_delayed,
    strategy_to_kraus,
    verify_delayed,
)
from .bounds import (
    BoundReport,
    bound_report,
    delayed_shannon_bound,
    delayed_tau1_bound,
    eta_bar_collision,
    eta_bar_shannon,
    shannon_linear_bound,
    shannon_sharp_bound,
    tabulate_curve,
    tau1_bound,
)
from .metrics import collision_corrected, disturbance_fid, shannon_information
from .protocol import ProtocolConfig, SessionResult, run_session
from .quantum import DensityMatrix, KrausSet, signal_state

__version__ = "0.1.0"
