import numpy as np

from civr.problems import AffineExpectationOracle


class PureSamplerOracle(AffineExpectationOracle):
    """Expectation-mode oracle with no exact evaluation (a genuine sampler)."""

    @property
    def exact_available(self):
        return False

    def eval_full(self, x):
        raise ValueError("pure sampler: exact means unavailable")


def pure_sampler(p=2, noise=0.1):
    return PureSamplerOracle(np.eye(p), np.zeros(p), noise, noise)
