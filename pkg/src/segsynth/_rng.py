"""Deterministic 64-bit seed derivation.

Counter-based splitmix64 mixing so every consumer (variant seeds, batch-plan
slot draws) is reproducible and independent of execution order.
"""

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x &= _MASK64
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


def mix(*parts: int) -> int:
    """Fold integer parts into one 64-bit value, order-sensitively."""
    state = 0x9E3779B97F4A7C15
    for part in parts:
        state = splitmix64(state ^ (part & _MASK64))
    return state


def derive_seed(base_seed: int, record_id: str, index: int) -> int:
    return mix(base_seed, fnv1a64(record_id), index)


def unit_float(value: int) -> float:
    """Map a 64-bit integer to [0, 1)."""
    return (value & _MASK64) / float(1 << 64)


class SlotStream:
    """Deterministic per-counter stream of 64-bit draws."""

    def __init__(self, seed: int, counter: int):
        self._state = mix(seed, counter)

    def next_u64(self) -> int:
        self._state = splitmix64(self._state)
        return self._state

    def next_unit(self) -> float:
        return unit_float(self.next_u64())

    def next_below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n
