import numpy as np
import pytest

from signorini_lab.spectral import TraceExpansion, build_mode_table


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_expansion(rng, d, K, decay=1.0):
    table = build_mode_table(d, K)
    c = rng.standard_normal(len(table)) / (1.0 + table.alphas) ** decay
    return TraceExpansion(table, c)
