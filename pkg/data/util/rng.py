"""
SplitMix64 stream with Box-Muller normals.

The state advances by a fixed odd increment per draw, so a block of draws is
computed at once with wrapping uint64 arithmetic; identical seeds give the same
stream everywhere.
"""
import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _as_shape(shape):
    return (int(shape),) if np.isscalar(shape) else tuple(int(s) for s in shape)


class Rng():
    def __init__(self, seed=0):
        self.state = int(seed) & _MASK

    def next_u64(self, count):
        count = int(count)
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over='ignore'):
            z = np.uint64(self.state) + steps * GOLDEN_GAMMA
            out = _mix(z)
        self.state = (self.state + count * int(GOLDEN_GAMMA)) & _MASK
        return out

    def uniform(self, shape, low=0.0, high=1.0):
        """ doubles on [low, high) from the top 53 bits """
        shape = _as_shape(shape)
        count = int(np.prod(shape))
        u = (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        return (low + (high - low) * u).reshape(shape)

    def normal(self, shape):
        shape = _as_shape(shape)
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        u = self.uniform((2, pairs))
        radius = np.sqrt(-2.0 * np.log(1.0 - u[0]))
        angle = 2.0 * np.pi * u[1]
        z = np.stack((radius * np.cos(angle), radius * np.sin(angle)), axis=1).reshape(-1)
        return z[:count].reshape(shape)

    def permutation(self, n):
        """ Fisher-Yates driven by the uniform stream """
        order = np.arange(n)
        u = self.uniform((max(n - 1, 1),))
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            order[i], order[j] = order[j], order[i]
        return order
