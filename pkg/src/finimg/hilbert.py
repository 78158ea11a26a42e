"""Hilbert space-filling curve between 1D indices and 2D grid coordinates.

Coordinates use a lower-left origin: x is the column, y counts up from the
bottom row. The order-1 curve visits (0,0), (0,1), (1,1), (1,0).
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class HilbertOrder:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"curve order must be >= 1, got {self.n}")

    @property
    def side(self) -> int:
        return 2**self.n

    @property
    def capacity(self) -> int:
        return self.side * self.side


def min_order(d: int) -> HilbertOrder:
    """Smallest order whose grid holds d cells."""
    if d < 1:
        raise ValueError("need at least one cell")
    n = 1
    while 4**n < d:
        n += 1
    return HilbertOrder(n)


def _rotate(s: int, x: int, y: int, rx: int, ry: int) -> tuple[int, int]:
    if ry == 0:
        if rx == 1:
            x = s - 1 - x
            y = s - 1 - y
        x, y = y, x
    return x, y


def hilbert_d2xy(order: HilbertOrder, index: int) -> tuple[int, int]:
    """Coordinate of the index-th point on the order-n curve."""
    if not 0 <= index < order.capacity:
        raise ValueError(f"index {index} outside 0..{order.capacity - 1}")
    x = y = 0
    t = index
    s = 1
    while s < order.side:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        x, y = _rotate(s, x, y, rx, ry)
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return x, y


def hilbert_xy2d(order: HilbertOrder, x: int, y: int) -> int:
    """Inverse of hilbert_d2xy."""
    if not (0 <= x < order.side and 0 <= y < order.side):
        raise ValueError(f"coordinate ({x}, {y}) outside the {order.side}x{order.side} grid")
    t = 0
    s = order.side // 2
    while s > 0:
        rx = 1 if x & s else 0
        ry = 1 if y & s else 0
        t += s * s * ((3 * rx) ^ ry)
        x, y = _rotate(s, x, y, rx, ry)
        s //= 2
    return t
