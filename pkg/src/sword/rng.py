"""Deterministic random streams.

Every stochastic quantity in the package is drawn from a Philox
(counter-based, 64-bit) generator whose key is derived from a
``numpy.random.SeedSequence`` built as::

    SeedSequence(seed, spawn_key=(domain, *path))

``domain`` separates independent consumers (probe vectors, graph
generation, ...) and ``path`` identifies the unit of work (snapshot
timestep, run index, ...). Because a unit's stream depends only on
``(seed, domain, path)``, results do not depend on the order in which
units are processed or on how they are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

PROBES = 1
SHARED_PROBES = 2
GRAPHS = 3
EXPERIMENT = 4


def substream(seed: int, domain: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(domain), *map(int, path)))
    return np.random.Generator(np.random.Philox(ss))


def rademacher(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``(n, count)`` matrix of +-1 entries; column r is probe r.

    Probes are drawn row-major from ``count`` consecutive blocks of the
    generator, so probe r is the r-th block of length n of the stream.
    """
    bits = rng.integers(0, 2, size=(count, n), dtype=np.int8)
    return (2.0 * bits - 1.0).T
