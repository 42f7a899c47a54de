"""Counter-based pseudorandomness for the randomized baselines.

Every random decision is value(seed, counter) of a SplitMix64 stream, so runs
are reproducible from the seed alone and machines can evaluate their own
records' coins without communication.
"""

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(seed: int, counter: int) -> int:
    """The counter-th 64-bit output of the SplitMix64 stream with this seed."""
    z = (seed + (counter + 1) * _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def coin(seed: int, counter: int, num: int, den: int) -> bool:
    """True with probability num/den (exact rational threshold on 64 bits)."""
    return splitmix64(seed, counter) < (num << 64) // den


def coin_p(seed: int, counter: int, p: float) -> bool:
    """True with probability ~p (threshold round(p * 2**64))."""
    t = min(1 << 64, max(0, round(p * (1 << 64))))
    return splitmix64(seed, counter) < t
