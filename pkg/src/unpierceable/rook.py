"""Good rook placements on a torus grid.

A placement is stored row-wise: ``cols[r]`` is the column of the single
rook in row ``r``. It is *good* when ``cols`` is a permutation and no two
rooks are king-adjacent once the grid's opposite sides are identified.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional


class RookError(ValueError):
    pass


class PlacementSearchExhausted(RookError):
    pass


@dataclass(frozen=True)
class RookPlacement:
    v: int
    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "cols", tuple(int(c) for c in self.cols))

    def to_json(self) -> dict:
        return {"v": self.v, "cols": list(self.cols)}

    @classmethod
    def from_json(cls, data: dict) -> "RookPlacement":
        return cls(int(data["v"]), tuple(data["cols"]))

    def shifted(self, drow: int = 0, dcol: int = 0) -> "RookPlacement":
        v = self.v
        return RookPlacement(v, tuple((self.cols[(r - drow) % v] + dcol) % v for r in range(v)))


def check_grid_size(v: int) -> int:
    """Return ``k`` with ``v == k*k`` and ``k >= 3``; raise otherwise."""
    if not isinstance(v, int) or v < 9:
        raise RookError(f"grid side must be k**2 with k >= 3, got {v!r}")
    k = math.isqrt(v)
    if k * k != v:
        raise RookError(f"grid side must be a perfect square, got {v}")
    return k


def torus_distance(a: int, b: int, v: int) -> int:
    d = abs(a - b) % v
    return min(d, v - d)


def find_violation(v: int, cols) -> Optional[str]:
    """Describe the first violated condition, or ``None`` for a good placement."""
    if len(cols) != v:
        return f"expected {v} rows, got {len(cols)}"
    seen = {}
    for r, c in enumerate(cols):
        if not 0 <= c < v:
            return f"row {r}: column {c} out of range"
        if c in seen:
            return f"column {c} holds rooks in rows {seen[c]} and {r}"
        seen[c] = r
    for r in range(v):
        r2 = (r + 1) % v
        if torus_distance(cols[r], cols[r2], v) <= 1:
            return f"rooks ({r}, {cols[r]}) and ({r2}, {cols[r2]}) are torus-adjacent"
    return None


def verify_good_placement(rp: RookPlacement) -> tuple:
    """``(ok, violation)`` for a placement on a ``k*k`` grid with ``k >= 3``."""
    check_grid_size(rp.v)
    violation = find_violation(rp.v, rp.cols)
    return violation is None, violation


def generate_good_placement(v: int, seed: int = 0) -> RookPlacement:
    """Deterministic backtracking search with most-constrained-row ordering.

    Column candidates are tried in an order drawn from ``random.Random(seed)``.
    """
    check_grid_size(v)
    rng = random.Random(seed)
    order = {r: rng.sample(range(v), v) for r in range(v)}
    cols = [-1] * v
    used = [False] * v
    budget = [200_000 * v]

    def candidates(r):
        out = []
        up, down = cols[(r - 1) % v], cols[(r + 1) % v]
        for c in order[r]:
            if used[c]:
                continue
            if up >= 0 and torus_distance(c, up, v) <= 1:
                continue
            if down >= 0 and torus_distance(c, down, v) <= 1:
                continue
            out.append(c)
        return out

    def solve(filled):
        if filled == v:
            return True
        budget[0] -= 1
        if budget[0] < 0:
            return False
        best_r, best_c = None, None
        for r in range(v):
            if cols[r] < 0:
                cand = candidates(r)
                if best_c is None or len(cand) < len(best_c):
                    best_r, best_c = r, cand
                    if not cand:
                        return False
        for c in best_c:
            cols[best_r] = c
            used[c] = True
            if solve(filled + 1):
                return True
            cols[best_r] = -1
            used[c] = False
        return False

    if not solve(0):
        raise PlacementSearchExhausted(f"no good placement found for v={v}, seed={seed}")
    rp = RookPlacement(v, tuple(cols))
    ok, violation = verify_good_placement(rp)
    if not ok:  # pragma: no cover - guarded invariant
        raise RookError(f"generator produced a bad placement: {violation}")
    return rp


def brute_force_enumerate(v: int, cap: Optional[int] = None) -> int:
    """Count good placements exactly, stopping early once ``cap`` are found."""
    check_grid_size(v)
    if v > 25:
        raise RookError("exhaustive enumeration is capped at v <= 25")
    cols = [0] * v
    used = [False] * v
    count = 0

    def rec(r):
        nonlocal count
        if cap is not None and count >= cap:
            return
        if r == v:
            if torus_distance(cols[v - 1], cols[0], v) > 1:
                count += 1
            return
        for c in range(v):
            if used[c]:
                continue
            if r > 0 and torus_distance(c, cols[r - 1], v) <= 1:
                continue
            cols[r] = c
            used[c] = True
            rec(r + 1)
            used[c] = False

    rec(0)
    return count
