"""Deterministic 64-bit sub-seed derivation.

Every random stream in the package is seeded through ``mix64`` so that
independent substreams (one per fare class, one per episode, one per
training phase) never share a generator state. The mixing recipe is part
of the reproducibility contract: given the same master seed and labels,
any build derives the same substream seeds.
"""

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One SplitMix64 round: advance by the golden-ratio increment and scramble."""
    x = (x + _GAMMA) & MASK64
    z = ((x ^ (x >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def mix64(seed: int, *labels: int) -> int:
    """Derive a decorrelated 64-bit seed from a base seed and integer labels.

    The recipe is fixed: one SplitMix64 round of the base seed, then for each
    label in order, one round of (state XOR splitmix64(label)). Labels
    identify the consumer, e.g. ``mix64(seed, class_id)`` for a fare class
    arrival stream or ``mix64(seed, stream, episode)`` for one episode.
    """
    state = splitmix64(seed & MASK64)
    for label in labels:
        state = splitmix64(state ^ splitmix64(label & MASK64))
    return state
