"""
Counter-based deterministic random streams.

Every draw is a pure function of (seed, counter): word i of a stream is
mix64(seed + (i + 1) * GAMMA), the SplitMix64 sequence. Streams are owned by a
single caller; concurrent work derives children with spawn().
"""
from typing import Optional, Tuple, Union

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
SPAWN_GAMMA = 0xD1B54A32D192ED03

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def mix64(x: int) -> int:
    """SplitMix64 finalizer of a 64-bit integer."""
    word = np.array([x & MASK64], dtype=np.uint64)
    return int(_mix_array(word)[0])


class RngStream:
    """Deterministic stream of 64-bit words with common distributions on top."""

    def __init__(self, seed: int):
        if seed < 0 or seed > MASK64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self.counter = 0

    def spawn(self, index: int) -> "RngStream":
        """Child stream for task `index`; independent of this stream's state."""
        return RngStream(mix64((self.seed + (index + 1) * SPAWN_GAMMA) & MASK64))

    def next_u64(self, n: int) -> np.ndarray:
        """Next n raw words; the counter advances by n."""
        if n < 0:
            raise ValueError("draw count must be non-negative")
        if n == 0:
            return np.zeros(0, dtype=np.uint64)
        steps = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + steps * np.uint64(GAMMA)
        self.counter += n
        return _mix_array(z)

    def random(self, size: Union[int, Tuple[int, ...]] = 1) -> np.ndarray:
        """Uniform doubles in [0, 1) with 53 bits of resolution."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        words = self.next_u64(count) >> np.uint64(11)
        return (words.astype(np.float64) * (1.0 / 9007199254740992.0)).reshape(shape)

    def normal(self, size: Union[int, Tuple[int, ...]] = 1, scale: float = 1.0) -> np.ndarray:
        """Standard normal draws via Box-Muller."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        pairs = (count + 1) // 2
        u = self.random(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        values = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return scale * values[:count].reshape(shape)

    def uniform(self, low: float, high: float, size: Union[int, Tuple[int, ...]] = 1) -> np.ndarray:
        return low + (high - low) * self.random(size)

    def integers(self, high: int, size: int = 1) -> np.ndarray:
        """Integers in [0, high)."""
        if high < 1:
            raise ValueError("high must be at least 1")
        values = np.floor(self.random(size) * high).astype(np.int64)
        return np.minimum(values, high - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform random permutation of range(n)."""
        return np.argsort(self.random(n), kind="stable")

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        """Sample `size` indices from range(n)."""
        if replace:
            return self.integers(n, size)
        if size > n:
            raise ValueError(f"cannot draw {size} of {n} without replacement")
        return self.permutation(n)[:size]

    def bernoulli_mask(self, shape: Tuple[int, ...], keep_prob: float) -> np.ndarray:
        """Boolean mask with each entry True with probability keep_prob."""
        return self.random(shape) < keep_prob

    def state(self) -> Tuple[int, int]:
        return self.seed, self.counter


def as_stream(rng: Optional[Union[RngStream, int]], default_seed: int = 0) -> RngStream:
    """Accept a stream, a seed, or None."""
    if isinstance(rng, RngStream):
        return rng
    return RngStream(default_seed if rng is None else int(rng))
