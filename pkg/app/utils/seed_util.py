"""Seed derivation for reproducible Monte-Carlo runs.

Per-sample seeds are derived from a master seed with the SplitMix64 finalizer,
so neighbouring sample indices give statistically unrelated streams while the
mapping stays a pure function of (master_seed, index).
"""

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """Return the SplitMix64 output for the state `value` (a 64-bit integer)."""
    z = (value + _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """
    Combine a master seed with an index into an independent 63-bit seed.

    The index is folded into the state with one SplitMix64 step per argument,
    so derive_seed(s, i) != derive_seed(i, s) in general.
    """
    state = splitmix64(master_seed & _MASK64)
    state = splitmix64((state ^ (index & _MASK64)) & _MASK64)
    # numpy accepts any non-negative int; keep it within signed 64 bits.
    return state >> 1
