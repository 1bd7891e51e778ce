"""Replication seeds derived from a master seed."""
from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_ODD = 0xD1B54A32D192ED03


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, replication: int) -> int:
    """64-bit seed for one replication.

    For a fixed master the map is a bijection of ``replication mod 2**64``,
    so distinct replications never collide.
    """
    x = _mix((master + _GOLDEN) & _MASK)
    return _mix(x ^ ((replication * _ODD + _GOLDEN) & _MASK))
