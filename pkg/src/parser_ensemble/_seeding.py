"""Counter-based seed derivation so members never share RNG state."""
import numpy as np

_MASK = (1 << 64) - 1

# stream tags, one per consumer of randomness
BAG = 1
BOOST = 2
SYNTH = 3
SHUFFLE = 4
NOISE = 5


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, stream: int, index: int = 0) -> int:
    """``splitmix64(splitmix64(master ^ stream) ^ index)``."""
    return splitmix64(splitmix64((master & _MASK) ^ stream) ^ index)


def rng_for(master: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, stream, index))
