"""Named, reproducible random substreams.

All randomness in the package flows from one master seed.  Each component
(fold split, masking, fuzzification, generator seeds, hints, weight init, ...)
draws from its own named substream so that any component can be reproduced in
isolation and cells of a benchmark can run in any order or in parallel.
"""

import zlib

import numpy as np


def _token(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"substream path ints must be non-negative, got {part}")
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"substream path parts must be str or int, got {type(part).__name__}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Derive an independent generator from ``master_seed`` and a name path.

    Example: ``substream(7, "mask", 30, 2)`` is the masking stream for the
    30%-proportion cell of fold 2.
    """
    key = tuple(_token(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))
