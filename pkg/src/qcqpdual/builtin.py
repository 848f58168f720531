"""The three literal counterexample instances replayed by ``qcqpdual example``."""
import math

import numpy as np

from .instance import make_instance

SQRT27_NOTE = "f[0] is sqrt(27) evaluated in double precision"


def example1():
    """P(x) = -x^2 + 2x with q = -P: minimizers 0 and 2."""
    return make_instance(-2.0, -2.0, [(2.0, -2.0, 0.0)])


def example2():
    """P(x) = -x^2 - x on [-2, 0]: the recovered point -1/2 is a maximizer."""
    return make_instance(-2.0, 1.0, [(1.0, 1.0, 0.0)])


def example3():
    """Indefinite A, ball of radius sqrt(26): C1 and C2 hold, no dual maximizer in S_plus."""
    return make_instance(
        np.diag([1.0, -1.0]),
        [math.sqrt(27.0), 1.0],
        [(4.0 * np.eye(2), np.zeros(2), 52.0)],
    )


EXAMPLES = {1: example1, 2: example2, 3: example3}
COMMENTS = {1: None, 2: None, 3: SQRT27_NOTE}


def get_example(k: int):
    try:
        return EXAMPLES[k]()
    except KeyError:
        raise ValueError(f"unknown example {k}; choose 1, 2 or 3") from None
