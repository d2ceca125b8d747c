"""Per-level refinement parameters and the global summability checks.

Each level is driven by a slab fraction ``delta``, a rook grid side ``v``,
a slab count ``t`` and a wall thickness ``eta``. The budget constant ``c``
bounds the partial sums of ``1/v``, ``delta`` and ``1/t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .geom import as_scalar, scalar_from_json, scalar_to_json
from .plumbing import Plumbing, initial_plumbing, min_dims
from .rook import RookError, check_grid_size

MIN_RECTS_PER_PIECE = 100


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Mode:
    c: Fraction
    faithful: bool = False

    def __post_init__(self):
        c = as_scalar(self.c)
        object.__setattr__(self, "c", c)
        if not 0 < c <= Fraction(1, 4):
            raise ScheduleError(f"budget constant must lie in (0, 1/4], got {c}")
        if self.faithful and c != Fraction(1, 100):
            raise ScheduleError("faithful mode fixes the budget constant at 1/100")


FAITHFUL = Mode(Fraction(1, 100), faithful=True)


def relaxed(c) -> Mode:
    return Mode(as_scalar(c))


@dataclass(frozen=True)
class LevelParams:
    n: int
    delta: Fraction
    v: int
    t: int
    eta: Fraction
    w: Fraction
    l: Fraction
    d: Fraction
    k: Fraction
    lam: Fraction
    seed: int = 0
    warnings: tuple = ()

    @property
    def k_ceil(self) -> int:
        return math.ceil(self.k)

    @property
    def slab_height(self) -> Fraction:
        """Thickness of one foliation slab, ``w / t``."""
        return self.w / self.t

    @property
    def rect_length(self) -> Fraction:
        """Nominal side ``delta * d`` of the rectangles a straight piece is cut into."""
        return self.delta * self.d

    def crossing_budget(self) -> Fraction:
        """``(t/v) (delta d)^2 / (2w)``, which must be at least 1."""
        return Fraction(self.t, self.v) * self.rect_length ** 2 / (2 * self.w)

    def to_json(self) -> dict:
        out = {"n": self.n, "v": self.v, "t": self.t, "seed": self.seed}
        for name in ("delta", "eta", "w", "l", "d", "k", "lam"):
            out[name] = scalar_to_json(getattr(self, name))
        out["warnings"] = list(self.warnings)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "LevelParams":
        kw = {name: scalar_from_json(data[name]) for name in ("delta", "eta", "w", "l", "d", "k", "lam")}
        return cls(n=int(data["n"]), v=int(data["v"]), t=int(data["t"]), seed=int(data.get("seed", 0)),
                   warnings=tuple(data.get("warnings", ())), **kw)


def smallest_slab_count(v: int, w, rect_length) -> int:
    """Least ``t`` with ``t = 1 (mod 2v)`` and ``(t/v) rect_length^2 / (2w) >= 1``."""
    need = Fraction(2 * v) * w / (rect_length * rect_length)
    t_min = max(1, math.ceil(need))
    step = 2 * v
    return 1 + step * max(0, -(-(t_min - 1) // step))


def derive_level(P: Plumbing, delta, v: int, mode: Mode, prior: Sequence[LevelParams] = (),
                 seed: int = 0, t_override: Optional[int] = None) -> LevelParams:
    """Parameters for refining ``P`` given the levels already built below it."""
    w, l, _ = min_dims(P)
    return derive_from_dims(w, l, delta, v, mode, prior, seed, t_override)


def derive_from_dims(w, l, delta, v: int, mode: Mode, prior: Sequence[LevelParams] = (),
                     seed: int = 0, t_override: Optional[int] = None) -> LevelParams:
    """Same as :func:`derive_level` from a width and min-length alone."""
    w, l = as_scalar(w), as_scalar(l)
    d = min(w, l)
    delta = as_scalar(delta)
    n = len(prior)
    if not 0 < delta < mode.c:
        raise ScheduleError(f"delta = {delta} violates 0 < delta < c = {mode.c}")
    try:
        check_grid_size(v)
    except RookError as exc:
        raise ScheduleError(str(exc)) from None
    if prior and v <= prior[-1].v:
        raise ScheduleError(f"v must increase strictly across levels: {prior[-1].v} then {v}")
    if sum(Fraction(1, p.v) for p in prior) + Fraction(1, v) >= mode.c:
        raise ScheduleError(f"sum of 1/v reaches the budget c = {mode.c}")
    if sum(p.delta for p in prior) + delta >= mode.c:
        raise ScheduleError(f"sum of delta reaches the budget c = {mode.c}")

    rect_length = delta * d
    t = smallest_slab_count(v, w, rect_length)
    if t_override is not None:
        if t_override < t or (t_override - 1) % (2 * v):
            raise ScheduleError(f"t_override = {t_override} must be >= {t} and 1 mod {2 * v}")
        t = t_override
    k = rect_length * t / (2 * v * w)
    lam = w / rect_length
    t_product = math.prod(p.t for p in prior) * t
    eta = w / (Fraction(100) ** (n + 1) * t_product)

    warnings = []
    per_piece = l / rect_length
    if per_piece < MIN_RECTS_PER_PIECE:
        warnings.append(f"shortest straight piece holds about {float(per_piece):.1f} rectangles "
                        f"(fewer than {MIN_RECTS_PER_PIECE})")
    if k.denominator != 1:
        warnings.append(f"stack count k = {k} is not an integer; counts use ceil(k) = {math.ceil(k)}")
    level = LevelParams(n, delta, v, t, eta, w, l, d, k, lam, seed, tuple(warnings))
    if level.crossing_budget() < 1:  # pragma: no cover - guaranteed by the choice of t
        raise ScheduleError("crossing budget fell below 1")
    if level.crossing_budget() != k * rect_length:  # pragma: no cover - algebraic identity
        raise ScheduleError("crossing budget identity failed")
    return level


def predict_next_dims(level: LevelParams) -> tuple:
    """``(w, l, d)`` of the next plumbing, computed from the parameters alone.

    The next width is one corridor, a slab minus one wall; the next
    min-length is the wall thickness of the hairpin passages.
    """
    w_next = level.slab_height - level.eta
    l_next = level.eta
    return w_next, l_next, min(w_next, l_next)


def params_only_schedule(eps0, mode: Mode, specs: Sequence) -> "Schedule":
    """Schedule whose later levels use predicted dimensions instead of built plumbings."""
    w, l, _ = min_dims(initial_plumbing(eps0))
    S = Schedule(as_scalar(eps0), mode)
    for spec in specs:
        level = derive_from_dims(w, l, spec.delta, spec.v, mode, S.levels, spec.seed, spec.t_override)
        S = S.extended(level)
        w, l, _ = predict_next_dims(level)
    return S


@dataclass(frozen=True)
class Check:
    name: str
    ok: Optional[bool]
    margin: Optional[Fraction] = None
    detail: str = ""

    def line(self) -> str:
        status = "n/a" if self.ok is None else ("pass" if self.ok else "FAIL")
        margin = "" if self.margin is None else f" margin={float(self.margin):.6g}"
        return f"{status:4} {self.name}{margin} {self.detail}".rstrip()


@dataclass(frozen=True)
class Schedule:
    eps0: Fraction
    mode: Mode
    levels: tuple = ()

    def extended(self, level: LevelParams) -> "Schedule":
        return Schedule(self.eps0, self.mode, self.levels + (level,))

    @property
    def sum_inv_v(self) -> Fraction:
        return sum((Fraction(1, p.v) for p in self.levels), Fraction(0))

    @property
    def sum_delta(self) -> Fraction:
        return sum((p.delta for p in self.levels), Fraction(0))

    @property
    def sum_inv_t(self) -> Fraction:
        return sum((Fraction(1, p.t) for p in self.levels), Fraction(0))

    @property
    def sum_w(self) -> Fraction:
        return sum((p.w for p in self.levels), Fraction(0))

    def to_json(self) -> dict:
        return {"epsilon0": scalar_to_json(self.eps0), "mode": {"c": scalar_to_json(self.mode.c),
                "faithful": self.mode.faithful}, "levels": [p.to_json() for p in self.levels]}


def check_global(S: Schedule, widths: Optional[Sequence] = None) -> list:
    """Evaluate the partial-sum constraints; never raises.

    ``widths`` optionally lists measured plumbing widths ``w_0, w_1, ...``;
    otherwise the widths recorded in the levels are used.
    """
    c = S.mode.c
    out = []
    if not S.levels:
        return [Check("levels", None, detail="no levels built")]

    def bound(name, value):
        out.append(Check(name, value < c, c - value))

    bound("sum 1/v < c", S.sum_inv_v)
    bound("sum delta < c", S.sum_delta)
    bound("sum 1/t < c", S.sum_inv_t)
    vs = [p.v for p in S.levels]
    out.append(Check("v strictly increasing", all(a < b for a, b in zip(vs, vs[1:]))))
    out.append(Check("t odd and 1 mod 2v", all(p.t % 2 == 1 and (p.t - 1) % (2 * p.v) == 0
                                               for p in S.levels)))
    out.append(Check("crossing budget >= 1", all(p.crossing_budget() >= 1 for p in S.levels),
                     min(p.crossing_budget() for p in S.levels) - 1))
    ws = list(widths) if widths is not None else [p.w for p in S.levels]
    pairs = [(ws[i + 1], S.levels[i]) for i in range(min(len(ws) - 1, len(S.levels)))]
    if not pairs:
        out.append(Check("w_next <= w/t", None, detail="not applicable (single level)"))
    else:
        margins = [p.w / p.t - w_next for w_next, p in pairs]
        out.append(Check("w_next <= w/t", all(m >= 0 for m in margins), min(margins)))
    total_w = sum((Fraction(x) for x in ws), Fraction(0))
    out.append(Check("partial sum of widths finite", True, None, detail=f"sum={float(total_w):.6g}"))
    return out


@dataclass(frozen=True)
class LevelSpec:
    delta: Fraction
    v: int
    seed: int = 0
    t_override: Optional[int] = None


def parse_config(data: dict) -> tuple:
    """``(eps0, mode, [LevelSpec])`` from the JSON build configuration."""
    eps0 = scalar_from_json(data["epsilon0"])
    mode_data = data.get("mode", {})
    if mode_data.get("faithful"):
        mode = FAITHFUL
    else:
        mode = relaxed(scalar_from_json(mode_data.get("c", {"n": "1", "d": "100"})))
    specs = []
    for item in data.get("levels", []):
        t_override = item.get("t_override")
        specs.append(LevelSpec(scalar_from_json(item["delta"]), int(item["v"]), int(item.get("seed", 0)),
                               None if t_override is None else int(t_override)))
    return eps0, mode, specs
