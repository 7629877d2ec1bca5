"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the CLI and the
sweep drivers can record failures per row without string matching.
"""


class NearCloakError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details


class UnsupportedDomainError(NearCloakError, ValueError):
    code = "unsupported-domain"


class SingularArgumentError(NearCloakError, ValueError):
    code = "singular-argument"


class OutsideDomainError(NearCloakError, ValueError):
    code = "outside-domain"


class NonSmoothPointError(NearCloakError, ValueError):
    code = "non-smooth-point"


class DegenerateMapError(NearCloakError, ValueError):
    code = "degenerate-map"


class InvalidExponentError(NearCloakError, ValueError):
    code = "invalid-exponent"


class EmRequires3DError(NearCloakError, ValueError):
    code = "em-requires-3d"


class OutsideCloakShellError(NearCloakError, ValueError):
    code = "outside-cloak-shell"


class CoatTooThickError(NearCloakError, ValueError):
    code = "coat-too-thick"


class ConfigError(NearCloakError, ValueError):
    code = "config-error"


class ModalSingularityError(NearCloakError, ArithmeticError):
    code = "modal-singularity"

    def __init__(self, message="", mode=None, **details):
        super().__init__(message or f"near-singular interface system at mode {mode}",
                         mode=mode, **details)
        self.mode = mode


class EvanescentOverflowError(NearCloakError, ArithmeticError):
    code = "evanescent-overflow"


class OdeStiffnessError(NearCloakError, ArithmeticError):
    code = "ode-stiffness"


class InterfaceInconsistencyError(NearCloakError, ValueError):
    code = "interface-inconsistency"


class InvalidPolarizationError(NearCloakError, ValueError):
    code = "invalid-polarization"


class InsufficientDataError(NearCloakError, ValueError):
    code = "insufficient-data"


class UncloakedSourceWarning(UserWarning):
    """A nonzero source sits in a lossless core; decay estimates do not apply."""

    code = "uncloaked-source"
