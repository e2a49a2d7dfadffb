"""Zeros of Gaussian holomorphic sections and Berezin-Toeplitz operators on model spaces."""

from .errors import LabError
from .model import ModelSpace, TruncationCertificate
from .randgauss import RngStream, SectionSample

__version__ = "0.1.0"

__all__ = ["LabError", "ModelSpace", "TruncationCertificate", "RngStream", "SectionSample", "__version__"]
