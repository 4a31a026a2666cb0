"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument violates a documented precondition."""


class NotPositiveDefinite(ArithmeticError):
    """A symmetric matrix failed its Cholesky factorization.

    ``pivot`` is the 0-based index of the first nonpositive pivot.
    """

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite "
                                    f"(nonpositive pivot at index {pivot})")


class DegenerateResidual(ArithmeticError):
    """A node's regression fit is exact, so its residual variance is ~0."""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"residual sum of squares for node {node} is below "
                         f"1e-12; precision entries are undefined")


class CycleDetected(RuntimeError):
    """The stepwise search revisited an earlier neighborhood state."""

    def __init__(self, iterations: int, trace=None):
        self.iterations = iterations
        self.trace = trace
        super().__init__(f"neighborhood state repeated after {iterations} "
                         f"iterations; thresholds induce a cycle")


class IterationLimit(RuntimeError):
    """The stepwise search ran out of iterations before stopping."""

    def __init__(self, iterations: int, trace=None):
        self.iterations = iterations
        self.trace = trace
        super().__init__(f"no stop after {iterations} iterations")
