"""Exception hierarchy shared by all quadhinf modules."""


class ToolboxError(Exception):
    """Base class for all quadhinf errors."""


# --- LTI core ---

class ZeroDenominator(ToolboxError):
    """Transfer function denominator is identically zero."""


class PoleEvaluation(ToolboxError):
    """Evaluation point coincides with a pole."""


class ImproperSystem(ToolboxError):
    """Operation requires a proper transfer function."""


class UnstableSystem(ToolboxError):
    """Operation requires a stable system."""


class AlgebraicLoop(ToolboxError):
    """Feedback interconnection is singular (1 + gh vanishes identically)."""


class PoleOnGrid(ToolboxError):
    """A frequency-grid point coincides with an imaginary-axis pole."""


class SingularTransform(ToolboxError):
    """Bilinear transform is singular (continuous pole at 2*fs)."""


class IntegratorPresent(ToolboxError):
    """DC gain undefined: system has a pole at the origin."""


# --- identification ---

class InvalidConfig(ToolboxError):
    """Configuration violates its documented invariants."""


class DegenerateSignal(ToolboxError):
    """Signal is constant or too short for the requested analysis."""


class InsufficientData(ToolboxError):
    """Not enough samples / grid points for the requested estimate."""


class IllConditioned(ToolboxError):
    """Least-squares normal equations are numerically singular."""


class NoAdmissibleCandidate(ToolboxError):
    """Every candidate model was rejected by the selection rules."""


# --- uncertainty ---

class NominalZero(ToolboxError):
    """Nominal model magnitude vanishes on the evaluation grid."""


class GridMismatch(ToolboxError):
    """Frequency grids of the operands differ."""


class FitDiverged(ToolboxError):
    """Weight magnitude fit failed to converge to a usable rational."""


class WeightValidationFailed(ToolboxError):
    """Fitted uncertainty weight does not dominate the profiles."""


# --- synthesis ---

class InvalidSpec(ToolboxError):
    """Design specification outside the supported range."""


class RankDeficient(ToolboxError):
    """Generalized plant violates the D12/D21 regularity conditions."""


class NoStabilizingSolution(ToolboxError):
    """Riccati equation has no stabilizing solution (Hamiltonian has
    eigenvalues on the imaginary axis)."""


class InfeasibleAtUpperBound(ToolboxError):
    """No admissible controller exists at the upper gamma bound."""


class InternallyUnstable(ToolboxError):
    """Closed loop is not internally stable."""


class UnstableController(ToolboxError):
    """Controller reduction requires a stable controller."""


class DeviationExceeded(ToolboxError):
    """Closed-loop deviation after reduction exceeds the allowed budget."""


# --- simulation ---

class NonFiniteState(ToolboxError):
    """Simulation state contains NaN or infinity."""


class InfeasibleAllocation(ToolboxError):
    """Mixer cannot realize the requested torques (negative squared speed)."""


class Diverged(ToolboxError):
    """Simulated attitude left the valid envelope."""
