"""Exception types shared across the package."""


class DistviacError(Exception):
    """Base class for all package errors."""


class ParseError(DistviacError):
    """Malformed mesh file. Carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class TopologyError(DistviacError):
    """Mesh violates a structural invariant (non-manifold edge, isolated
    vertex, empty Dirichlet boundary, non-positive triangle area)."""


class TagError(DistviacError):
    """A boundary edge carries no recognized tag, or tagging is inconsistent
    with the triangulation."""


class DegenerateElementError(DistviacError):
    """Triangle area is at or below the degeneracy threshold."""


class EmptyDirichletSetError(DistviacError):
    """Assembly requires at least one Dirichlet vertex."""


class DimensionMismatchError(DistviacError):
    """Vector length does not match the operator dimension."""


class NonFiniteError(DistviacError):
    """A NaN or infinity appeared inside a linear solve."""


class NonPositivePhiError(DistviacError):
    """Every neighbor used by a boundary update has non-positive phi, so the
    logarithm is undefined; signals a maximum-principle failure upstream."""


class OutsideDomainError(DistviacError):
    """Point lies outside the analytic test-case domain."""


class UnreachableVertexError(DistviacError):
    """Mesh edge graph is disconnected from the source set."""


class MeshMismatchError(DistviacError):
    """Two fields that must share a mesh do not."""


class OutputLockedError(DistviacError):
    """Another run holds the lock on the output directory."""
