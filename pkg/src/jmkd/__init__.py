"""Exact solution families of the Jimbo-Miwa equation and the KD system."""

from .expr import Bindings, ParamBinding, Point4, evaluate
from .families import FAMILIES, FAMILY_IDS, BuiltField, FamilySpec, SpecError, build, random_spec
from .parser import parse, to_text
from .verify import ResidualReport, fd_partial, sample_domain, verify_field

__all__ = [
    "Bindings", "ParamBinding", "Point4", "evaluate", "FAMILIES", "FAMILY_IDS", "BuiltField", "FamilySpec",
    "SpecError", "build", "random_spec", "parse", "to_text", "ResidualReport", "fd_partial", "sample_domain",
    "verify_field",
]
__version__ = "0.1.0"
