"""Exception types shared by every module.

Each error carries a short machine-readable ``code`` (for example
``"model.domain"`` or ``"zeros.contour_unresolved"``) so that batch drivers
can map failures to exit statuses without parsing messages.
"""

from __future__ import annotations


class LabError(Exception):
    """Base class.  ``code`` is a dotted identifier, ``details`` free-form."""

    code = "lab.error"
    numeric = False

    def __init__(self, message: str, code: str | None = None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details

    def reason(self) -> str:
        return f"{self.code}: {self}"


class ArgumentError(LabError, ValueError):
    code = "argument.invalid"


class DomainError(LabError, ValueError):
    code = "model.domain"


class BaseLocusError(LabError):
    code = "model.base_locus"
    numeric = True


class NumericOverflow(LabError, OverflowError):
    code = "model.overflow"
    numeric = True


class ContourError(LabError):
    """Argument-principle count could not be trusted on the given circle."""

    code = "zeros.contour_unresolved"
    numeric = True


class QuadratureError(LabError):
    code = "toeplitz.quadrature_fail"
    numeric = True


class EigenError(LabError):
    code = "toeplitz.eig_fail"
    numeric = True


class SplitAmbiguous(LabError):
    code = "toeplitz.split_ambiguous"
    numeric = True


class NotOrder2(LabError):
    code = "semiclassical.not_order2"


class CertificateVacuous(LabError):
    code = "experiments.cert_vacuous"
    numeric = True


class ConfigError(LabError):
    code = "config.invalid"
