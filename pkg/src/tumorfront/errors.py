"""Exception hierarchy.

Every failure mode that callers are expected to catch has its own class so
that the CLI can map it to a machine-readable error report.
"""
from __future__ import annotations


class TumorFrontError(Exception):
    """Base class for all package-specific failures."""


# --- model / parameter level ---

class ComplexRoots(TumorFrontError):
    """The tumor equilibria V+/- do not exist for these parameters."""


class NotEquilibrium(TumorFrontError):
    """A state passed as an equilibrium does not satisfy the kinetics."""


# --- singular-limit construction ---

class BeyondFold(TumorFrontError):
    """Requested acid level lies beyond the fold of the slow manifold."""


class SubspaceInvalid(TumorFrontError):
    """Layer front requested on a subspace where it is not defined."""


class NoRoot(TumorFrontError):
    """A bracketed root search found no sign change."""


class IntegrationFailure(TumorFrontError):
    """Quadrature or ODE integration failed to converge."""


# --- boundary-value solver ---

class NewtonDiverged(TumorFrontError):
    """Damped Newton failed to reduce the residual to tolerance."""


class WrongBranch(TumorFrontError):
    """Newton converged, but to a profile with the wrong far-field states."""


class HomotopyStuck(TumorFrontError):
    """Parameter continuation stalled below the minimum step size."""


# --- spectral computations ---

class EigSolverFailure(TumorFrontError):
    """The eigenvalue backend did not converge."""


class BranchLost(TumorFrontError):
    """An eigenvalue branch could not be followed across a parameter step."""


class AdjointDegenerate(TumorFrontError):
    """The adjoint null vector pairs (near-)orthogonally with the profile derivative."""


class DivergentWeight(TumorFrontError):
    """A weighted integral in the asymptotic formula fails to converge."""


# --- continuation / boundary tracing ---

class NoSignChange(TumorFrontError):
    """find_zero was asked to refine a branch with no sign change."""


class BoundaryNotFound(TumorFrontError):
    """No stability boundary was detected inside the search region."""


class CurveExitedRegion(TumorFrontError):
    """Boundary tracing left the requested parameter region (normal stop)."""


# --- 2D simulation ---

class BlowUp(TumorFrontError):
    """A simulated field exceeded the blow-up guard."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class WindowTooShort(TumorFrontError):
    """Growth-rate fitting window contains too few usable snapshots."""


# --- configuration / CLI ---

class ParseError(TumorFrontError):
    """Configuration file is not valid JSON."""


class ValidationError(TumorFrontError):
    """Configuration value violates a constraint."""


class UnknownKey(ValidationError):
    """Configuration contains a key that is not part of the schema."""
