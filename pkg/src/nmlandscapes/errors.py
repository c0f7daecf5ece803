"""Exception hierarchy shared by all modules."""


class LandscapeError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(LandscapeError, ValueError):
    pass


class InvalidInputError(LandscapeError, ValueError):
    pass


class UnsupportedModelError(LandscapeError):
    """The requested operation is not defined for this kind of landscape."""


class MinimumUnknownError(UnsupportedModelError):
    """No proven global minimum exists for the landscape kind."""


class BudgetExceededError(LandscapeError):
    def __init__(self, required: int, budget: int):
        super().__init__(
            f"enumeration needs {required} evaluations but the budget is {budget}; "
            f"raise the budget to at least {required}"
        )
        self.required = required
        self.budget = budget


class UndefinedStatisticError(LandscapeError, ValueError):
    pass
