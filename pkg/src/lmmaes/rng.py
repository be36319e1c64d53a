"""Seedable standard-normal streams.

Every stream wraps numpy's ``PCG64`` bit generator and draws normals with
``numpy.random.Generator.standard_normal`` (numpy's 256-layer ziggurat on
64-bit doubles). Given the seed, the uniform stream and therefore every
Gaussian draw are fixed, so optimizer trajectories replay bit-exactly.
Drawing a ``(k, n)`` block consumes the stream exactly like ``k``
consecutive draws of ``n`` values.
"""

from __future__ import annotations

import numpy as np

_SEED_MASK = (1 << 64) - 1


class GaussianStream:
    """Single-owner source of i.i.d. N(0, 1) doubles.

    Not safe to share between threads; derive one stream per run.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0 or seed > _SEED_MASK:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.reset()

    def reset(self) -> None:
        """Rewind to the initial state for ``self.seed``."""
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self.drawn = 0

    def next_normal_vector(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError(f"vector length must be >= 1, got {n}")
        self.drawn += n
        return self._gen.standard_normal(n)

    def next_normal_matrix(self, rows: int, n: int) -> np.ndarray:
        """Draw ``rows`` consecutive vectors of length ``n`` as one array."""
        if rows < 1 or n < 1:
            raise ValueError(f"shape must be positive, got ({rows}, {n})")
        self.drawn += rows * n
        return self._gen.standard_normal((rows, n))

    def __repr__(self) -> str:
        return f"GaussianStream(seed={self.seed}, drawn={self.drawn})"


def create_stream(seed: int) -> GaussianStream:
    return GaussianStream(seed)


def next_normal_vector(stream: GaussianStream, n: int) -> np.ndarray:
    return stream.next_normal_vector(n)


def init_generator(seed: int, purpose: int = 1) -> np.random.Generator:
    """Generator for non-Gaussian draws (e.g. the initial mean).

    Seeded from ``(seed, purpose)`` so it never perturbs the sampling stream.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), purpose])))
