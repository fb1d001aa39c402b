"""Counter-based PRNG streams for reproducible, parallelism-independent runs.

Every stream is a Philox-4x64 generator keyed by the pair
(master seed, stream index); distinct pairs give independent, documented
streams regardless of evaluation order or thread count.  Bernoulli draws are
thresholded raw 64-bit outputs, (raw >> 11) * 2^-53 < p, so sampled bit
matrices depend only on the Philox stream and are platform-stable.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# repetitions are grouped into fixed blocks; each block owns one stream, so
# serial and parallel execution consume identical draws
REP_BLOCK = 1024


def philox(seed: int, stream: int = 0) -> np.random.Philox:
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key)


def raw_uniforms(bitgen: np.random.Philox, count: int) -> np.ndarray:
    """Uniforms on [0,1) built from raw 64-bit words (53-bit mantissas)."""
    raw = bitgen.random_raw(count)
    return (raw >> np.uint64(11)) * (2.0**-53)


def bernoulli_matrix(seed: int, stream: int, n: int, J: int, p: np.ndarray) -> np.ndarray:
    """n x J matrix of independent Bernoulli(p_j) bits, row-major draw order."""
    if n * J == 0:
        return np.zeros((n, J), dtype=np.uint8)
    u = raw_uniforms(philox(seed, stream), n * J).reshape(n, J)
    return (u < p[None, :]).astype(np.uint8)


def spawn_seed(master: int, index: int) -> int:
    """Derived 64-bit seed for sub-task `index` (documented: SeedSequence)."""
    ss = np.random.SeedSequence(entropy=master & _MASK64, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])
