"""Exception hierarchy shared by all modules.

Every error carries a machine-readable ``category`` used by the CLI to pick
an exit code.
"""


class StokesEigError(Exception):
    category = "internal"


class ConfigurationError(StokesEigError):
    """Invalid user-facing configuration: unsupported order, bad domain, ..."""
    category = "config"


class MeshError(StokesEigError):
    """Mesh invariant violated (orientation, conformity, tagging)."""
    category = "mesh"


class AssemblyError(StokesEigError):
    """Assembled operator failed a structural check (e.g. singular pencil)."""
    category = "assembly"


class KindMismatchError(StokesEigError):
    """A discrete field of the wrong kind was passed to a postprocess step."""
    category = "config"


class UnsupportedSchemeError(StokesEigError):
    """Operation limited to the lowest-order scheme got a higher-order one."""
    category = "config"


class SingularMatrixError(StokesEigError):
    """Factorization hit a zero pivot.

    ``kind`` is ``"structural"`` (empty row/column) or ``"numerical"``
    (pivot below tolerance); ``pivot_index`` is set for numerical failures
    when known.
    """
    category = "solver"

    def __init__(self, message, kind, pivot_index=None):
        super().__init__(message)
        self.kind = kind
        self.pivot_index = pivot_index


class ShiftAtEigenvalueError(StokesEigError):
    """The shifted operator could not be factorized; retry with another shift."""
    category = "solver"


class UnconvergedError(StokesEigError):
    """Eigensolver ran out of restarts.  ``partial`` holds converged pairs."""
    category = "solver"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TrackingError(StokesEigError):
    """The adaptive loop lost (or could not disambiguate) the tracked eigenvalue."""
    category = "solver"


class IOFailureError(StokesEigError):
    category = "io"
