import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Seeded Philox (64-bit counter-based) generator; stream is platform independent."""
    return np.random.Generator(np.random.Philox(int(seed)))
