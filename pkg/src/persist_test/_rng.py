import numpy as np


def derive_seed(*keys):
    """Deterministic 63-bit seed from a tuple of non-negative integer keys."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint64)
    return int(state[0] >> np.uint64(1))


def substream(*keys):
    return np.random.default_rng([int(k) for k in keys])
