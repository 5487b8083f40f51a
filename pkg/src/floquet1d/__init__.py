"""Floquet-Bloch analysis of SH waves in 1D periodic (functionally graded) media.

Submodules
----------
profile      material profiles, averages, extrema, monoclinic reduction
matricant    propagator (matricant) and monodromy of the first-order system
lyapunov     the Lyapunov function ``Delta = tr M(1,0) / 2`` and its derivatives
spectrum     dispersion branches, band edges, stopbands, zero-width stopbands
isofreq      isofrequency branches ``K_j(k)``, slopes and convexity certificate
asymptotics  WKB approximation and rigorous bounds
greenfn      quasi-periodic Green function and resolvent
loader       YAML/JSON profile documents
cli          command-line front end
"""

__version__ = "0.1.0"

from . import asymptotics, catalog, errors, greenfn, isofreq, loader, lyapunov, matricant, profile, spectrum
from .catalog import BUILTIN
from .loader import load_profile
from .lyapunov import delta, delta_values
from .matricant import DEFAULT_CONFIG, QuadratureConfig, monodromy, propagate
from .profile import MaterialProfile, Segment

__all__ = [
    "__version__",
    "asymptotics",
    "catalog",
    "errors",
    "greenfn",
    "isofreq",
    "loader",
    "lyapunov",
    "matricant",
    "profile",
    "spectrum",
    "BUILTIN",
    "load_profile",
    "delta",
    "delta_values",
    "DEFAULT_CONFIG",
    "QuadratureConfig",
    "monodromy",
    "propagate",
    "MaterialProfile",
    "Segment",
]
