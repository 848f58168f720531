"""Exception types raised by the library."""


class QCQPDualError(Exception):
    """Base class for all library errors."""


class InputError(QCQPDualError, ValueError):
    """Malformed instance data or mismatched dimensions."""


class SingularG(QCQPDualError):
    """G(sigma) = A + sum sigma_i Q_i failed the conditioning gate.

    The dual value is undefined at such a point (it is not -inf).
    """

    def __init__(self, sigma, rcond):
        self.sigma = sigma
        self.rcond = rcond
        super().__init__(f"G(sigma) is numerically singular at sigma={sigma!r} (rcond={rcond:.3e})")


class MNotOne(QCQPDualError):
    """Region analysis needs exactly one constraint."""


class EmptyY(QCQPDualError):
    """No dual point recovers a primal-feasible x."""


class EmptySPlus(QCQPDualError):
    """No dual point makes G(sigma) positive definite."""


class NoCompactConstraint(QCQPDualError):
    """No positive definite Q_k bounds the feasible set and no box was given."""


class DimensionTooLarge(QCQPDualError):
    """Brute-force search refused for n > 4."""


class InfeasibleEverywhere(QCQPDualError):
    """No feasible grid point was found, even after refinement."""
