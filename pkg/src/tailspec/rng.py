"""Deterministic random-number streams for parallel Monte Carlo work.

Every replication (or simulated series) gets its own counter-based stream
derived from ``(master_seed, index)``.  Streams are independent of each
other and of how work is scheduled across processes, so results are
reproducible regardless of worker count.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def rng_stream(master_seed: int, index: int) -> np.random.Generator:
    """Return the generator for stream ``index`` under ``master_seed``.

    Uses the Philox counter-based bit generator keyed on the pair, so
    construction is cheap and streams never overlap.
    """
    key = [master_seed & _MASK64, index & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))
