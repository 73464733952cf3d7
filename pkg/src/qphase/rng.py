"""Seedable random streams.

Every stochastic routine in the package takes an :class:`RngState`.  A state
is identified by ``(seed, stream_id)``; child streams extend the key so that
replications, chains and initialisations never share a prefix.  Draws come
from numpy's PCG64 bit generator seeded through :class:`numpy.random.SeedSequence`.
"""
import numpy as np

from .errors import DomainError

#: Seed used whenever the caller does not supply one.
DEFAULT_SEED = 20250101

_MASK64 = (1 << 64) - 1


class RngState:
    """A reproducible stream of random draws.

    Parameters
    ----------
    seed : int
        Master seed, taken modulo 2**64.
    stream_id : int
        Stream index under the master seed (e.g. the replication number).
    """

    def __init__(self, seed=DEFAULT_SEED, stream_id=0, _key=None):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._key = tuple(_key) if _key is not None else (self.stream_id,)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngState(seed={self.seed}, key={self._key})"

    def child(self, *keys):
        """Independent sub-stream keyed by ``keys`` (ints or short strings)."""
        ext = tuple(_key_int(k) for k in keys)
        return RngState(self.seed, self.stream_id, _key=self._key + ext)

    def standard_normal(self):
        return float(self.generator.standard_normal())

    def normal_vector(self, p):
        return normal_vector(self, p)

    def normal_matrix(self, m, p):
        return self.generator.standard_normal((m, p))

    def uniform(self, n):
        return self.generator.random(n)


def _key_int(k):
    if isinstance(k, str):
        # stable across runs, unlike hash()
        return int.from_bytes(k.encode("utf-8")[:8].ljust(8, b"\0"), "little")
    return int(k) & _MASK64


def standard_normal(state):
    """One N(0, 1) draw; advances ``state``."""
    return state.standard_normal()


def normal_vector(state, p):
    """``p`` i.i.d. N(0, 1) draws as a float64 array."""
    p = int(p)
    if p < 1:
        raise DomainError(f"invalid dimension p={p}; need p >= 1")
    return state.generator.standard_normal(p)


def as_rng(rng=None, seed=None):
    """Coerce ``rng`` (RngState, int seed or None) into an RngState."""
    if isinstance(rng, RngState):
        return rng
    if rng is not None:
        return RngState(int(rng))
    return RngState(DEFAULT_SEED if seed is None else seed)
