"""
Domain exceptions
领域异常 - 校验错误（退出码1）与运行失败（退出码2）
"""

from typing import Optional


class GridKrigError(Exception):
    """Base class for every error raised by gridkrig"""

    exit_code: int = 2


# ---------------------------------------------------------------------------
# Validation errors (exit code 1)
# ---------------------------------------------------------------------------

class GridKrigValidationError(GridKrigError, ValueError):
    exit_code = 1


class NonPositiveTheta(GridKrigValidationError):
    def __init__(self, theta: float):
        self.theta = theta
        super().__init__(f"theta must be positive, got {theta!r}")


class UnknownFamily(GridKrigValidationError):
    def __init__(self, family: object):
        self.family = family
        super().__init__(f"unknown covariance family: {family!r}")


class UnknownProfile(GridKrigValidationError):
    def __init__(self, profile: object):
        self.profile = profile
        super().__init__(f"unknown profile: {profile!r}")


class ClosedFormUnavailable(GridKrigValidationError):
    def __init__(self, family: object):
        self.family = family
        super().__init__(f"closed-form aliased sum only exists for Exponential, got {family}")


class ProfileMismatch(GridKrigValidationError):
    def __init__(self, true_profile: object, used_profile: object):
        super().__init__(f"models use different profiles: {true_profile} vs {used_profile}")


class UnsupportedDimension(GridKrigValidationError):
    def __init__(self, dimension: int):
        self.dimension = dimension
        super().__init__(f"dimension must be 1 or 2, got {dimension}")


class BadGridStep(GridKrigValidationError):
    def __init__(self, step: object):
        self.step = step
        super().__init__(f"grid steps must be positive and finite, got {step!r}")


class BadSampleSize(GridKrigValidationError):
    def __init__(self, size: int):
        self.size = size
        super().__init__(f"sample size must be >= 2, got {size}")


class ExtrapolationRequest(GridKrigValidationError):
    def __init__(self, point: float, interval: tuple):
        self.point = point
        super().__init__(f"test point {point!r} lies outside training interval {interval}")


class CoincidentTestPoint(GridKrigValidationError):
    def __init__(self, point: float):
        self.point = point
        super().__init__(f"test point {point!r} coincides with a training point")


class EmptyTestSet(GridKrigValidationError):
    def __init__(self):
        super().__init__("prediction set is empty")


class TooFewPairs(GridKrigValidationError):
    def __init__(self, n_effective: int, minimum: int = 5):
        self.n_effective = n_effective
        super().__init__(f"need at least {minimum} nonzero paired differences, got {n_effective}")


class EmptySample(GridKrigValidationError):
    def __init__(self):
        super().__init__("cannot summarize an empty sample")


class ConfigParseError(GridKrigValidationError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class ConfigValidationError(GridKrigValidationError):
    def __init__(self, field: str, message: str = "missing or invalid"):
        self.field = field
        super().__init__(f"{field}: {message}")


# ---------------------------------------------------------------------------
# Runtime failures (exit code 2)
# ---------------------------------------------------------------------------

class GridKrigRuntimeError(GridKrigError, RuntimeError):
    exit_code = 2


class NoConvergence(GridKrigRuntimeError, ArithmeticError):
    def __init__(self, message: str, terms: Optional[int] = None):
        self.terms = terms
        super().__init__(message)


class QuadratureFailure(GridKrigRuntimeError, ArithmeticError):
    def __init__(self, message: str, estimate: Optional[float] = None, error: Optional[float] = None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class NotPositiveDefinite(GridKrigRuntimeError):
    def __init__(self, max_jitter: float):
        self.max_jitter = max_jitter
        super().__init__(f"covariance matrix not positive definite even with jitter {max_jitter:g}")


class ReplicateFailure(GridKrigRuntimeError):
    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"replicate {index} failed: {cause}")


class CellFailure(GridKrigRuntimeError):
    def __init__(self, cell: str, cause: Exception):
        self.cell = cell
        self.cause = cause
        super().__init__(f"cell {cell} failed: {cause}")


class OutputError(GridKrigRuntimeError, OSError):
    def __init__(self, path: str, cause: Exception):
        self.path = path
        self.cause = cause
        super().__init__(f"cannot write {path}: {cause}")
