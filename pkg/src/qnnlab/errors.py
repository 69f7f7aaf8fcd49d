"""Exception types shared across qnnlab."""


class InvalidArgument(ValueError):
    """Bad shape, size, index or non-finite input."""


class DataError(ValueError):
    """Malformed or non-finite sampled data."""


class DomainError(ValueError):
    """Target function leaves the range a circuit can express."""


class ConditionError(ValueError):
    """A polynomial pair violates one of the unitary-block conditions.

    ``condition`` is 1 (degree bound), 2 (parity), 3 (|P|^2 + |Q|^2 = 1)
    or ``"real"`` when a YZY pair carries complex coefficients.
    """

    def __init__(self, condition, message):
        super().__init__(f"condition {condition} violated: {message}")
        self.condition = condition


class ConstraintViolation(ValueError):
    """|P(x)| > 1 somewhere, so no complementary polynomial exists."""

    def __init__(self, witness_x, value):
        super().__init__(f"|P(x)| = {value:.12g} > 1 at x = {witness_x:.12g}")
        self.witness_x = witness_x
        self.value = value


class NumericalError(ArithmeticError):
    """An iterative or root-finding step did not reach its tolerance."""


class NumericalDegeneracyError(NumericalError):
    """A peeling step failed to cancel the leading coefficients."""
