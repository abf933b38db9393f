"""Exception hierarchy for hyperhdg.

All library errors derive from HyperHDGError so callers can catch one type.
The CLI maps validation errors to exit code 2 and solver errors to exit 1.
"""


class HyperHDGError(Exception):
    """Base class for all hyperhdg errors."""


# -- graph construction / validation ---------------------------------------

class DanglingFace(HyperHDGError):
    """An edge face has no incidence record, or a node is never referenced."""


class DegreeMismatch(HyperHDGError):
    """Node kind is inconsistent with its degree (e.g. Neumann node with degree > 1)."""


class Disconnected(HyperHDGError):
    """The hypergraph is not connected through shared hypernodes."""


class GeometryMismatch(HyperHDGError):
    """Edge frame invalid, or an incidence isometry fails the point-composition check."""


class BasisMismatch(HyperHDGError):
    """Trace coefficients are inconsistent with the node polynomial space."""


# -- mesh factory -----------------------------------------------------------

class GuardExceeded(HyperHDGError):
    """Requested filling/refinement level exceeds the configured memory guard."""


# -- local solver -----------------------------------------------------------

class UnsupportedOrder(HyperHDGError):
    """Quadrature order outside the supported range."""


class SingularGeometry(HyperHDGError):
    """Edge has a zero-length axis."""


class SingularLocalSystem(HyperHDGError):
    """The local saddle system could not be factorized."""


class DimensionMismatch(HyperHDGError):
    """Coefficient vector sizes do not match the local spaces."""


# -- skeletal system --------------------------------------------------------

class OrientationError(HyperHDGError):
    """Isometry scatter failed the round-trip check during assembly."""


class NoConvergence(HyperHDGError):
    """Iterative solver exceeded its iteration budget (signals an assembly bug)."""


# -- analysis ---------------------------------------------------------------

class NonPositiveError(HyperHDGError):
    """EOC requested for a non-positive error value."""


# -- thin-domain laboratory ---------------------------------------------------

class OverlapError(HyperHDGError):
    """Thin-domain arms would overlap the node hull for the requested epsilon."""


class SolveFailure(HyperHDGError):
    """The thin-domain linear solve failed."""
