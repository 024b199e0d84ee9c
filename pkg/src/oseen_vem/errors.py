"""Exception hierarchy shared by the mesh, element, assembly and solver layers."""


class OseenVEMError(Exception):
    """Base class for all package errors."""


class InvalidDomain(OseenVEMError):
    pass


class DegenerateCell(OseenVEMError):
    pass


class NonSimplePolygon(OseenVEMError):
    pass


class EmptyDirichlet(OseenVEMError):
    pass


class SingularProjector(OseenVEMError):
    pass


class AssemblyError(OseenVEMError):
    def __init__(self, element, cause):
        super().__init__(f"element {element}: {cause}")
        self.element = element
        self.cause = cause


class TooCoarse(OseenVEMError):
    """The mesh leaves no free velocity degrees of freedom."""


class FactorizationSingular(OseenVEMError):
    pass


class NonConvergence(OseenVEMError):
    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


class DimensionTooLarge(OseenVEMError):
    pass


class IllConditionedFit(OseenVEMError):
    pass
