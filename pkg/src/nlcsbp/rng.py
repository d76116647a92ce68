"""Counter-based random streams.

A stream is fully determined by (seed, stream_id, counter): output word k of
stream (seed, sid) is philox4x64-10(key=(seed, sid), block=k>>2) lane k&3,
mapped to a double in (0,1).  Distinct stream ids give statistically
independent streams, so Monte Carlo runs assign stream_id = sample index and
results are independent of scheduling and worker count.

Path engines consume one whole block (4 words) per event; sequential
consumers use words one at a time.  Both views address the same sequence.
"""

from __future__ import annotations

import zlib

import numpy as np

from . import _kernels

_BUF_WORDS = 4096


def derive_seed(seed, label):
    """Mix a user seed with a textual label into a 64-bit stream seed."""
    h = zlib.crc32(label.encode()) & 0xFFFFFFFF
    x = (int(seed) ^ (h * 0x9E3779B97F4A7C15)) & 0xFFFFFFFFFFFFFFFF
    # splitmix64 finalizer
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


class RngStream:
    """One reproducible stream; advancing the counter is the only state change."""

    __slots__ = ("seed", "stream_id", "_word", "_buf", "_buf_lo")

    def __init__(self, seed, stream_id=0, counter=0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        self._word = int(counter)
        self._buf = None
        self._buf_lo = 0

    @property
    def counter(self):
        """Index of the next word to be produced."""
        return self._word

    def clone(self):
        return RngStream(self.seed, self.stream_id, self._word)

    def jump_to(self, counter):
        """Reposition the stream; the sequence from here is as if freshly drawn."""
        self._word = int(counter)
        return self

    def spawn(self, k):
        """Independent stream keyed off this one (stream_id offset by k)."""
        return RngStream(self.seed, (self.stream_id + int(k)) & 0xFFFFFFFFFFFFFFFF)

    def _refill(self, lo, n):
        self._buf = _kernels.uniform_words(self.seed, self.stream_id, lo, max(n, _BUF_WORDS))
        self._buf_lo = lo

    def uniforms(self, n):
        """n doubles in (0,1), words [counter, counter+n)."""
        lo = self._word
        if (self._buf is None or lo < self._buf_lo
                or lo + n > self._buf_lo + len(self._buf)):
            self._refill(lo, n)
        out = self._buf[lo - self._buf_lo:lo - self._buf_lo + n]
        self._word = lo + n
        return out.copy()

    def uniform(self):
        return float(self.uniforms(1)[0])

    def exponential(self):
        return -np.log(self.uniform())

    def block_uniforms(self):
        """Align to the next block boundary and return its 4 uniforms.

        This is the consumption pattern of the path engines: event k of a
        path reads block k, lanes 0..3.
        """
        if self._word & 3:
            self._word = (self._word | 3) + 1
        return self.uniforms(4)

    def __repr__(self):
        return (f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
                f"counter={self._word})")
