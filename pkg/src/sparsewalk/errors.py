"""Exception hierarchy.

Every error named in an operation contract is a distinct class so callers can
catch precisely the failure they are prepared to handle.  All of them derive
from :class:`SparseWalkError`.
"""


class SparseWalkError(Exception):
    """Base class for all errors raised by this package."""


# -- kernel validation ------------------------------------------------------

class EmptySupport(SparseWalkError):
    """Kernel or potential has no support where some is required."""


class NotNormalized(SparseWalkError):
    """Kernel probabilities are negative or do not sum to one."""


class NotSymmetric(SparseWalkError):
    """p(x) != p(-x) for some offset."""


class NotIrreducible(SparseWalkError):
    """Sums of support offsets fail to reach the finite proxy cube."""


class BoxTooSmall(SparseWalkError):
    """Working box does not strictly contain the kernel range."""


class ThetaNotOnSpectrum(SparseWalkError):
    """Supplied frequency does not match the requested spectral point."""


# -- resolvent --------------------------------------------------------------

class LambdaInSpectrum(SparseWalkError):
    """Resolvent requested at a point of (or too close to) the spectrum."""


class QuadratureNotConverged(SparseWalkError):
    """Richardson comparison of grid levels failed to contract."""


class SeriesDiverges(SparseWalkError):
    """Resolvent power series requested with |lambda| <= 1."""


class NonPositiveValue(SparseWalkError):
    """Log-linear fit fed a value <= 0."""


class TooFewPoints(SparseWalkError):
    """Fit requested with fewer points than the contract minimum."""


# -- potentials -------------------------------------------------------------

class AnchorBelowV0(SparseWalkError):
    """Anchor value smaller than the sparse level it must dominate."""


class InsufficientSupport(SparseWalkError):
    """Fewer than two support points beyond the requested radius."""


class NotFoundInBox(SparseWalkError):
    """No concentration cube inside the working box (box too small)."""


# -- Birman-Schwinger -------------------------------------------------------

class BSNotInvertible(SparseWalkError):
    """1 is an eigenvalue of the Birman-Schwinger matrix within tolerance."""


class Epsilon0Zero(SparseWalkError):
    """inf |1 - gamma V_K| vanished; the excluded set K is too small."""


class AlphaTooLarge(SparseWalkError):
    """Requested weight exponent is not below the Green decay rate."""


# -- spectral truncations ---------------------------------------------------

class BoxTooLarge(SparseWalkError):
    """Truncation volume exceeds the configured dense cap."""


class NoConvergence(SparseWalkError):
    """Iterative eigensolver hit its iteration cap."""


class NoRootAboveOne(SparseWalkError):
    """g_lambda(0) = 1 + 1/v0 has no solution above 1 (legitimate in d >= 3)."""


class NotStabilized(SparseWalkError):
    """Discrete eigenvalue candidates failed the Cauchy check across boxes."""


class GapNotCertified(SparseWalkError):
    """Neither -r < ell nor a bipartite sign certifies the absolute gap."""


# -- Gibbs dynamics ---------------------------------------------------------

class EigenResidualTooLarge(SparseWalkError):
    """Eigenpair handed to the Doob transform is not converged enough."""


class NonPositivePhi(SparseWalkError):
    """Doob transform needs a strictly positive eigenfunction."""


class RowDeficitTooLarge(SparseWalkError):
    """Chain rows lose too much mass before renormalization."""


class StartOutsideBox(SparseWalkError):
    """Chain simulation started outside the truncation box."""


class HorizonExceedsBox(SparseWalkError):
    """Path horizon cannot be absorbed by the working box."""


class NoDecayDetected(SparseWalkError):
    """Marginal deviations do not decay over the requested range."""


# -- CLI --------------------------------------------------------------------

class ConfigInvalid(SparseWalkError):
    """Experiment configuration failed validation."""


class ExperimentFailed(SparseWalkError):
    """An experiment assertion was violated; message names the invariant."""
