"""Order-independent seed derivation for per-frame randomness.

``derive_frame_seed`` chains three SplitMix64 finalisers::

    h = mix64(global_seed)
    h = mix64(h ^ frame_id)
    h = mix64(h ^ kind_ordinal)

with every input reduced modulo 2**64 and ``kind_ordinal`` the index of the
corruption kind in :data:`pcrobust.corruption.KINDS` (non-corruption stages
use ordinals >= 64).  Golden value: ``derive_frame_seed(0, 0, 0) ==
0x238275BC38FCBE91``.
"""

from __future__ import annotations

from typing import Union

MASK64 = (1 << 64) - 1

# ordinals for derived streams that are not corruption kinds
STAGE_WET_GROUND = 64
STAGE_DENOISE = 65

GOLDEN_MIX_000 = 0x238275BC38FCBE91


def mix64(x: int) -> int:
    """SplitMix64 step: add the golden gamma, then finalise."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_frame_seed(global_seed: int, frame_id: int, kind: Union[str, int]) -> int:
    if isinstance(kind, str):
        from .corruption.profile import kind_ordinal

        ordinal = kind_ordinal(kind)
    else:
        ordinal = int(kind)
    h = mix64(int(global_seed) & MASK64)
    h = mix64(h ^ (int(frame_id) & MASK64))
    return mix64(h ^ (ordinal & MASK64))
