"""
Exception hierarchy.

Every exception carries the process exit code that :mod:`mcse.runner` uses
when the exception escapes a command.

========================== =========
Exception                  Exit code
========================== =========
:class:`ConfigError`       1
:class:`InvalidInputError` 2
:class:`FormatError`       2
:class:`NumericalError`    3
========================== =========
"""

import typing as tp


class McseError(Exception):
    """Base class for all errors raised by :mod:`mcse`."""

    exit_code: tp.ClassVar[int] = 2


class ConfigError(McseError, ValueError):
    """A configuration value or command-line flag is out of range."""

    exit_code = 1


class InvalidInputError(McseError, ValueError):
    """Input data has the wrong shape, length or content."""

    exit_code = 2


class FormatError(InvalidInputError):
    """A decoder weight file could not be parsed.

    Args:
        message: description of the problem.
        tensor_name: name of the tensor (or header field) being read when the problem was found.
    """

    def __init__(self, message: str, tensor_name: str | None = None):
        if tensor_name is not None:
            message = f"{message} (tensor {tensor_name!r})"
        super().__init__(message)
        self.tensor_name = tensor_name


class NumericalError(McseError, ArithmeticError):
    """A non-finite value appeared in a likelihood, score or update.

    The fields are filled in as the error travels outwards: the score evaluation
    knows the frame, the sampler adds the step and the EM driver adds the iteration
    and the log-likelihood trace recorded so far.
    """

    exit_code = 3

    def __init__(
        self,
        message: str,
        *,
        frame: int | None = None,
        step: int | None = None,
        iteration: int | None = None,
        partial_trace: tp.Sequence[float] = (),
    ):
        super().__init__(message)
        self.message = message
        self.frame = frame
        self.step = step
        self.iteration = iteration
        self.partial_trace = list(partial_trace)

    def with_context(self, **context) -> "NumericalError":
        """Copy of this error with more location fields set."""
        fields = {
            "frame": self.frame,
            "step": self.step,
            "iteration": self.iteration,
            "partial_trace": self.partial_trace,
        }
        fields.update({k: v for k, v in context.items() if v is not None})
        return NumericalError(self.message, **fields)

    def __str__(self):
        where = [
            f"{name} {value}"
            for name, value in (("iteration", self.iteration), ("step", self.step), ("frame", self.frame))
            if value is not None
        ]
        if where:
            return f"{self.message} at {', '.join(where)}"
        return self.message
