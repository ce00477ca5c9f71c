from pathlib import Path
from typing import Optional, Sequence


class DistributedLoglinearException(Exception):
    pass


class InvalidCellSpace(DistributedLoglinearException):
    pass


class CellSpaceMismatch(DistributedLoglinearException):
    def __init__(self, expected: int, actual: int):
        super().__init__(
            f"Cells belong to different cell spaces: expected {expected} coordinates, "
            f"got {actual}"
        )


class InvalidGeneratingClass(DistributedLoglinearException):
    pass


class InvalidGraph(DistributedLoglinearException):
    pass


class InvalidThetaVector(DistributedLoglinearException):
    pass


class InvalidProbabilityVector(DistributedLoglinearException):
    pass


class InvalidContingencyTable(DistributedLoglinearException):
    pass


class InvalidSolverConfig(DistributedLoglinearException):
    pass


class InvalidExperimentSpec(DistributedLoglinearException):
    pass


class BufferedTargetCell(DistributedLoglinearException):
    def __init__(self, cell: str, vertex: int):
        self.cell = cell
        self.vertex = vertex
        super().__init__(
            f"The target cell {cell} is buffered at vertex {vertex}: its marginal "
            "parameter differs from the overall parameter, so the local estimates of it "
            "are discarded. Choose a cell whose support is not contained in the buffer set."
        )


class CapacityExceeded(DistributedLoglinearException):
    """
    Raised if an operation would have to enumerate more cells (or cliques) than the
    configured guard allows.
    """

    ERROR_MESSAGE = "\nRefusing to {operation}: {count} exceeds the limit of {limit}!"
    ADVICE_MESSAGE = (
        "\n\nExact enumeration is only feasible at desk scale. Use the one-hop or "
        "two-hop local estimators (which only enumerate neighbourhood marginals), Gibbs "
        "sampling instead of exact sampling, or raise the guard explicitly."
    )

    def __init__(self, operation: str, count: int, limit: int):
        self.operation = operation
        self.count = count
        self.limit = limit
        super().__init__()

    def __str__(self) -> str:
        return (
            self.ERROR_MESSAGE.format(
                operation=self.operation, count=self.count, limit=self.limit
            )
            + self.ADVICE_MESSAGE
        )


class EstimationFailed(DistributedLoglinearException):
    """
    Raised if a parameter estimate could not be computed.
    """

    ERROR_MESSAGE = "\nCould not estimate the canonical parameters{location}!"
    CAUSE_MESSAGE_INTRO = " This is most likely caused by:\n\n{cause}"
    CAUSE_MESSAGE = ""

    def __init__(self):
        self.vertex: Optional[int] = None
        super().__init__()

    def at_vertex(self, vertex: int) -> "EstimationFailed":
        self.vertex = vertex
        return self

    @property
    def cause(self) -> str:
        return self.CAUSE_MESSAGE

    @property
    def flags_nonexistence(self) -> bool:
        """Whether the failure means the data do not admit an estimate."""
        return True

    def _build_error_message(self) -> str:
        location = "" if self.vertex is None else f" at vertex {self.vertex}"
        error_message = self.ERROR_MESSAGE.format(location=location)
        cause = self.cause
        if cause:
            error_message += self.CAUSE_MESSAGE_INTRO.format(cause=cause)
        return error_message

    def __str__(self) -> str:
        return self._build_error_message()


class MleDoesNotExist(EstimationFailed):
    CAUSE_MESSAGE = "The maximum likelihood estimate does not exist: {reason}"

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__()

    @property
    def cause(self) -> str:
        return self.CAUSE_MESSAGE.format(reason=self.reason)


class IpfNotConverged(EstimationFailed):
    CAUSE_MESSAGE = (
        "Iterative proportional fitting did not converge after {cycles} cycles "
        "(largest marginal gap {residual:.3e}). The data are probably on the boundary "
        "of the marginal polytope, in which case the maximum likelihood estimate does "
        "not exist."
    )

    def __init__(self, residual: float, cycles: int):
        self.residual = residual
        self.cycles = cycles
        super().__init__()

    @property
    def cause(self) -> str:
        return self.CAUSE_MESSAGE.format(residual=self.residual, cycles=self.cycles)


class NewtonNotConverged(EstimationFailed):
    CAUSE_MESSAGE = (
        "Newton's method did not converge after {iterations} iterations "
        "(gradient norm {gradient_norm:.3e})"
    )

    def __init__(self, gradient_norm: float, iterations: int):
        self.gradient_norm = gradient_norm
        self.iterations = iterations
        super().__init__()

    @property
    def cause(self) -> str:
        return self.CAUSE_MESSAGE.format(
            gradient_norm=self.gradient_norm, iterations=self.iterations
        )


class DegenerateFisherMatrix(EstimationFailed):
    CAUSE_MESSAGE = (
        "The Fisher information matrix {what} is numerically singular, so the model is "
        "not identifiable at this point"
    )

    def __init__(self, what: str = ""):
        self.what = what
        super().__init__()

    @property
    def cause(self) -> str:
        return self.CAUSE_MESSAGE.format(what=self.what).replace("  ", " ")


class CoverageError(EstimationFailed):
    CAUSE_MESSAGE = (
        "No vertex produced an estimate for the parameter of cell {cell}: every vertex "
        "of its support has the support inside its buffer set"
    )

    def __init__(self, cell: str):
        self.cell = cell
        super().__init__()

    @property
    def cause(self) -> str:
        return self.CAUSE_MESSAGE.format(cell=self.cell)

    @property
    def flags_nonexistence(self) -> bool:
        return False


class NotDecomposable(EstimationFailed):
    CAUSE_MESSAGE = (
        "The graph is not decomposable (it has a chordless cycle), so the closed "
        "clique/separator formula does not apply"
    )

    @property
    def flags_nonexistence(self) -> bool:
        return False


class DataFileUnparsable(DistributedLoglinearException):
    def __init__(self, path: Path, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{path}, line {line_number}: {reason}")


class DataStarvation(DistributedLoglinearException):
    def __init__(self, sample_size: int, replications: int):
        self.sample_size = sample_size
        self.replications = replications
        super().__init__(
            f"All {replications} replications at sample size {sample_size} were "
            "discarded because the maximum likelihood estimate did not exist. Increase "
            "the sample size or the number of replications."
        )


class TheoremCheckFailed(DistributedLoglinearException):
    def __init__(self, failures: Sequence[str]):
        self.failures = list(failures)
        super().__init__(
            "{count} verification check(s) failed:\n{details}".format(
                count=len(self.failures),
                details="\n".join(f" - {failure}" for failure in self.failures),
            )
        )
