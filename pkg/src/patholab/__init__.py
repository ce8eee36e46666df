"""Explicit pathological solutions of -div(A grad u) = 0 with continuous A,
and numerical checks of their properties."""

from patholab.families import (
    Family,
    FamilyParams,
    RadialField,
    RadialProfile,
    alpha_from_profile,
    choose_r0,
    eval_profile,
    radial_field,
)

__version__ = "0.1.0"

__all__ = [
    "Family",
    "FamilyParams",
    "RadialField",
    "RadialProfile",
    "alpha_from_profile",
    "choose_r0",
    "eval_profile",
    "radial_field",
    "__version__",
]
