"""Wavefront schedule: parallel steps of row- and column-disjoint blocks."""

from __future__ import annotations

from dataclasses import dataclass

Block = tuple[int, int]


@dataclass(frozen=True)
class Schedule:
    """Ordered parallel steps; blocks within one step share no block-row or block-col."""

    I: int
    J: int
    steps: tuple[tuple[Block, ...], ...]


def wavefront(I: int, J: int) -> Schedule:
    """Diagonal-first schedule covering every block of an I x J grid exactly once.

    Step s contains the blocks ((j + s) mod L, j) for j in [0, J) that fall
    inside the grid, with L = max(I, J): the main diagonal runs first, then
    each column advances downward, wrapping to the top. Rectangular grids are
    embedded in the L x L Latin square and out-of-bounds blocks dropped,
    which keeps the step count at max(I, J).
    """
    if I < 1 or J < 1:
        raise ValueError("block counts must be at least 1")
    L = max(I, J)
    steps = tuple(
        tuple(((j + s) % L, j) for j in range(J) if (j + s) % L < I)
        for s in range(L)
    )
    return Schedule(I=I, J=J, steps=steps)
