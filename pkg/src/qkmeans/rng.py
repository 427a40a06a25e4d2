"""Seeded random streams.

All randomness in the package flows through :func:`make_rng`, a numpy
``Generator`` over the Philox4x64 counter-based bit generator. Child seeds for
independent sub-computations (a distance query, a kernel entry, a trial) come
from :func:`derive_seed`, which hashes the parent seed together with integer
keys via ``SeedSequence``. Results therefore do not depend on the order in
which sub-computations are scheduled.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & _MASK64))


def derive_seed(seed: int, *keys: int) -> int:
    """Return a 64-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def polar_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal deviates by the Marsaglia polar method.

    Uniform pairs are drawn from ``rng.random`` in fixed-size blocks and
    accepted in stream order, so the output is a pure function of the
    generator state and ``size``.
    """
    out = np.empty(size, dtype=float)
    filled = 0
    while filled < size:
        need = (size - filled + 1) // 2
        block = max(16, int(need * 1.3) + 4)
        u = 2.0 * rng.random((block, 2)) - 1.0
        s = u[:, 0] ** 2 + u[:, 1] ** 2
        ok = (s > 0.0) & (s < 1.0)
        u, s = u[ok], s[ok]
        f = np.sqrt(-2.0 * np.log(s) / s)
        pairs = (u * f[:, None]).ravel()
        take = min(pairs.size, size - filled)
        out[filled:filled + take] = pairs[:take]
        filled += take
    return out
