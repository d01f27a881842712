import numpy as np
import pytest

from atfnb.dataset import Dataset


def random_dataset(seed, max_m=200, max_n=8, max_K=4, min_m=10, signal=0.5):
    """Categorical data where each attribute copies a shifted class code with probability ``signal``."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(min_m, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    K = int(rng.integers(2, max_K + 1))
    y = rng.integers(0, K, m)
    V = rng.integers(2, 5, n)
    cols = []
    for j in range(n):
        noisy = rng.integers(0, V[j], m)
        cols.append(np.where(rng.random(m) < signal, (y + j) % V[j], noisy))
    X = np.stack(cols, axis=1)
    return Dataset(tuple(f"A{j}" for j in range(n)),
                   tuple(tuple(f"v{v}" for v in range(V[j])) for j in range(n)),
                   tuple(f"c{k}" for k in range(K)), X, y, name=f"random{seed}")


@pytest.fixture
def toy():
    rows = [["x", "p"], ["x", "q"], ["y", "q"], ["y", "q"], ["x", "p"], ["y", "p"]]
    labels = ["a", "a", "b", "b", "a", "b"]
    return Dataset.from_symbols(rows, labels)
