"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A parameter lies outside the documented domain of an operation."""


class InvalidMesh(ValueError):
    """Mesh geometry or topology violates the mesh invariants."""


class MeshParseError(InvalidMesh):
    """A mesh file does not follow the JSON schema.

    ``locus`` names the offending cell or interface when known.
    """

    def __init__(self, message, locus=None):
        self.locus = locus
        if locus is not None:
            message = f"{locus}: {message}"
        super().__init__(message)


class SolverFailure(RuntimeError):
    """A numerical solve did not reach its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
