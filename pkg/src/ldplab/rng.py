"""Deterministic, parallel-safe random streams.

Every Monte Carlo run owns a private counter-based stream keyed by
(master_seed, run_index).  Streams for distinct runs use distinct Philox
keys, so any number of runs can be generated concurrently, in any order
and on any number of workers, with bit-identical results.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One round of SplitMix64; bijective on 64-bit integers."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream_key(master_seed: int, run_index: int) -> np.ndarray:
    """128-bit Philox key for one run.

    Each 64-bit word is an independent bijection of its input, so the map
    (master_seed mod 2^64, run_index mod 2^64) -> key is injective.
    """
    k0 = _splitmix64(int(master_seed) & _MASK64)
    k1 = _splitmix64(int(run_index) & _MASK64)
    return np.array([k0, k1], dtype=np.uint64)


def run_generator(master_seed: int, run_index: int) -> np.random.Generator:
    """Fresh generator for one run's private stream."""
    return np.random.Generator(np.random.Philox(key=stream_key(master_seed, run_index)))


class StreamPool:
    """Reusable generator that can be re-keyed to any run's stream.

    Constructing a Philox/Generator pair per run costs ~25 us; resetting the
    state of a shared pair costs ~3 us and yields the exact same draws as
    ``run_generator``.  Ensemble loops over 2^20 runs use this.
    """

    def __init__(self, master_seed: int):
        self._seed_word = _splitmix64(int(master_seed) & _MASK64)
        self._bitgen = np.random.Philox(key=np.array([0, 0], dtype=np.uint64))
        self.generator = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state
        self._state["state"]["key"][0] = self._seed_word

    def reset(self, run_index: int) -> np.random.Generator:
        """Rewind the shared generator to the start of run_index's stream."""
        st = self._state
        st["state"]["key"][1] = _splitmix64(int(run_index) & _MASK64)
        st["state"]["counter"][:] = 0
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self.generator
