"""Benchmark landscapes with known global extrema, plus NK and Walsh forms and
the analysis and search tools used to study them."""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    InvalidInputError,
    InvalidParameterError,
    LandscapeError,
    MinimumUnknownError,
    UndefinedStatisticError,
    UnsupportedModelError,
)
from .model import (
    BINARY,
    Alphabet,
    InteractionModel,
    Kind,
    Term,
    build_type1,
    build_type1_master,
    build_type1_proportion,
    build_type2,
    build_type3,
    evaluate,
    evaluate_many,
    max_location,
    max_value,
    min_location,
    min_value,
    normalize_by_max,
    normalize_minmax,
    subset_schedule,
)
