"""Exact computations on odd symplectic superspaces.

Superfunctions with rational-function coefficients, the odd bracket and the
second-order operators built from it, differential forms and their images as
semidensities, and invariant semidensities on surfaces of codimension (1|1).
"""
from .grassmann import (
    CoeffFunction,
    ContextMismatch,
    GrassmannError,
    GrassmannNumber,
    NotASquare,
    NotInvertible,
    ParityError,
    SuperFunction,
    SuperMatrix,
    VarContext,
    berezin_integral,
    berezinian,
    derivative,
    evaluate,
    invert_even,
    random_superfunction,
    sqrt_even,
    substitute,
)
from .parser import ParseError, format_superfunction, parse_expression
from .symplectic import (
    CoordinateMapPair,
    Diagnostics,
    Semidensity,
    VolumeForm,
    buttin,
    delta0,
    delta_Q,
    delta_sharp,
    delta_v,
    diagnostics,
    ham_field,
    point_transformation,
    transform_density,
    verify_darboux,
)
from .forms import DifferentialForm, Polyvector, exterior_d, interior, schouten, tau, tau_sharp, tau_sharp_inverse
from .surfaces import (
    A_adjusted,
    A_param,
    AdjustedSurface,
    EquationSurface,
    GraphSurface,
    P0_P1,
    ParamSurface,
    dual_A,
    dual_A_at,
)
from .verify import SuiteConfig, verify_suite

__version__ = "0.1.0"
