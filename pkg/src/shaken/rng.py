"""Counter-based random numbers for scheduling-independent sweeps.

Every uniform consumed by the dynamics is a pure function of
``(seed, sweep, phase, site, replica)``. The generator is Philox4x32-10
(Salmon et al., SC'11) evaluated on numpy arrays, so a whole half-step
draws its randoms in one vectorized call and any partition of the site
range over workers reproduces the same bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10


class Phase(IntEnum):
    """Counter slot distinguishing the consumers within one sweep."""

    HALF_12 = 1
    HALF_21 = 2
    BASELINE = 3
    INIT = 4
    ORIENT = 5
    COUPLING = 6


def philox4x32(counter, key) -> tuple[np.ndarray, ...]:
    """Philox4x32-10 block function.

    ``counter`` is a sequence of four broadcastable arrays of 32-bit words,
    ``key`` a pair. Returns four uint64 arrays holding 32-bit outputs.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    k0, k1 = (np.asarray(k, dtype=np.uint64) & _MASK32 for k in key)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
    return c0, c1, c2, c3


def _to_unit(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    # 53 random bits -> double in [0, 1)
    bits = (hi << np.uint64(21)) ^ (lo >> np.uint64(11))
    return bits.astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class RngStream:
    """Keyed source of uniforms addressed by counters, not by call order."""

    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

    @property
    def _key(self) -> tuple[int, int]:
        s = int(self.seed)
        return s & 0xFFFFFFFF, s >> 32

    def words(self, sweep, phase, site, replica=0) -> tuple[np.ndarray, ...]:
        sweep = np.asarray(sweep, dtype=np.uint64)
        counter = (
            np.asarray(site, dtype=np.uint64),
            sweep & _MASK32,
            sweep >> _SHIFT32,
            (np.asarray(replica, dtype=np.uint64) << np.uint64(3)) | np.uint64(int(phase)),
        )
        return philox4x32(counter, self._key)

    def uniform(self, sweep, phase, site, replica=0) -> np.ndarray:
        """Uniform in [0, 1) for each broadcast (sweep, phase, site, replica)."""
        w0, w1, _, _ = self.words(sweep, phase, site, replica)
        return _to_unit(w0, w1)

    def uniform_pair(self, sweep, phase, site, replica=0) -> tuple[np.ndarray, np.ndarray]:
        """Two independent uniforms from the same counter block."""
        w0, w1, w2, w3 = self.words(sweep, phase, site, replica)
        return _to_unit(w0, w1), _to_unit(w2, w3)
