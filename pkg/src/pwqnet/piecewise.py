"""Intervals and piecewise quadratic / piecewise affine functions on the line.

A piecewise function is stored as an ordered list of pieces whose interval
regions are chained: the upper bound of piece i is the lower bound of piece
i+1 (the same float, not merely a close one).  Value continuity across
breakpoints is a property of honest constructions (dynamic programming,
residual extraction) and is checked by the verification module rather than
enforced here, so that deliberately broken functions can still be built and
fed to the checkers.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

from .errors import ChainBroken, OutOfDomain

#: Absolute tolerance for value continuity at breakpoints.
EPS_CONT = 1e-9

#: Componentwise tolerance below which adjacent pieces are merged.
EPS_MERGE = 1e-9

#: Grace band at the outermost domain bounds: evaluation points within this
#: distance of the domain are clamped instead of rejected, so that grids and
#: successor states computed in floating point never fall off the edge.
EPS_DOMAIN = 1e-9


@dataclass(frozen=True)
class Interval1D:
    """Closed interval [lower, upper] with finite bounds and lower < upper."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError(f"interval bounds must be finite, got {self}")
        if not self.lower < self.upper:
            raise ValueError(f"improper interval: {self}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol

    def contains_interval(self, other: "Interval1D") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper

    def intersect(self, other: "Interval1D") -> "Interval1D | None":
        lo = max(self.lower, other.lower)
        hi = min(self.upper, other.upper)
        if lo < hi:
            return Interval1D(lo, hi)
        return None

    def clamp(self, x: float) -> float:
        return min(max(x, self.lower), self.upper)

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"[{self.lower:g}, {self.upper:g}]"


@dataclass(frozen=True)
class PwqPiece:
    """One quadratic piece S*x**2 + l*x + c on an interval region."""

    region: Interval1D
    S: float
    l: float
    c: float

    def value(self, x: float) -> float:
        return (self.S * x + self.l) * x + self.c

    def slope(self, x: float) -> float:
        return 2.0 * self.S * x + self.l


@dataclass(frozen=True)
class PwaPiece:
    """One affine piece K*x + b on an interval region."""

    region: Interval1D
    K: float
    b: float

    def value(self, x: float) -> float:
        return self.K * x + self.b


def _check_chained(regions: list[Interval1D]) -> None:
    if not regions:
        raise ChainBroken("piecewise function needs at least one piece")
    for left, right in zip(regions, regions[1:]):
        if left.upper != right.lower:
            raise ChainBroken(
                f"regions do not tile an interval: piece ending at "
                f"{left.upper!r} followed by piece starting at {right.lower!r}"
            )


class _PiecewiseBase:
    """Shared lookup machinery for chained piecewise functions."""

    pieces: tuple

    def __init__(self, pieces) -> None:
        pieces = tuple(pieces)
        _check_chained([p.region for p in pieces])
        self.pieces = pieces
        # Upper bounds, used for binary-search lookup.
        self._uppers = [p.region.upper for p in pieces]

    @property
    def domain(self) -> Interval1D:
        return Interval1D(self.pieces[0].region.lower, self.pieces[-1].region.upper)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior breakpoints shared by adjacent pieces."""
        return tuple(p.region.upper for p in self.pieces[:-1])

    def piece_index(self, x: float, tol: float = EPS_DOMAIN) -> int:
        """Index of the piece containing ``x``.

        At a shared breakpoint the piece with the smaller index wins.  Points
        within ``tol`` of the outer domain bounds are clamped inward.
        """
        dom = self.domain
        if not dom.contains(x, tol):
            raise OutOfDomain(f"x={x!r} outside domain {dom}")
        x = dom.clamp(x)
        i = bisect_left(self._uppers, x)
        return min(i, len(self.pieces) - 1)

    def piece_at(self, x: float, tol: float = EPS_DOMAIN):
        return self.pieces[self.piece_index(x, tol)]

    def __len__(self) -> int:
        return len(self.pieces)

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.pieces == other.pieces

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.pieces))

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}({list(self.pieces)!r})"


class PwqFunction1D(_PiecewiseBase):
    """Continuous piecewise quadratic function on chained interval regions."""

    pieces: tuple[PwqPiece, ...]

    def __call__(self, x: float) -> float:
        return self.piece_at(x).value(self.domain.clamp(x))

    def slope(self, x: float) -> float:
        return self.piece_at(x).slope(self.domain.clamp(x))

    def max_continuity_gap(self) -> float:
        """Largest value mismatch between adjacent pieces at a breakpoint."""
        gap = 0.0
        for left, right in zip(self.pieces, self.pieces[1:]):
            b = left.region.upper
            gap = max(gap, abs(left.value(b) - right.value(b)))
        return gap


class PwaFunction1D(_PiecewiseBase):
    """Continuous piecewise affine function on chained interval regions."""

    pieces: tuple[PwaPiece, ...]

    def __call__(self, x: float) -> float:
        return self.piece_at(x).value(self.domain.clamp(x))

    def max_continuity_gap(self) -> float:
        gap = 0.0
        for left, right in zip(self.pieces, self.pieces[1:]):
            b = left.region.upper
            gap = max(gap, abs(left.value(b) - right.value(b)))
        return gap


def eval_pwq(pwq: PwqFunction1D, x: float) -> float:
    """Evaluate a piecewise quadratic at ``x`` (OutOfDomain outside)."""
    return pwq(x)


def eval_pwa(pwa: PwaFunction1D, x: float) -> float:
    """Evaluate a piecewise affine function at ``x`` (OutOfDomain outside)."""
    return pwa(x)


def _merge_runs(pieces, coeffs, eps):
    """Group consecutive pieces whose coefficients match the run head."""
    runs = [[0]]
    for i in range(1, len(pieces)):
        head = runs[-1][0]
        if all(abs(a - b) < eps for a, b in zip(coeffs[i], coeffs[head])):
            runs[-1].append(i)
        else:
            runs.append([i])
    return runs


def canonicalize(pwq: PwqFunction1D, eps_merge: float = EPS_MERGE) -> PwqFunction1D:
    """Merge adjacent pieces whose (S, l, c) agree within ``eps_merge``.

    The merged piece keeps the coefficients of the first piece of each run,
    so the represented function changes by at most eps_merge-scale amounts.
    Idempotent: a second pass finds nothing to merge.
    """
    coeffs = [(p.S, p.l, p.c) for p in pwq.pieces]
    runs = _merge_runs(pwq.pieces, coeffs, eps_merge)
    merged = []
    for run in runs:
        head = pwq.pieces[run[0]]
        region = Interval1D(head.region.lower, pwq.pieces[run[-1]].region.upper)
        merged.append(PwqPiece(region, head.S, head.l, head.c))
    return PwqFunction1D(merged)


def canonicalize_pwa(pwa: PwaFunction1D, eps_merge: float = EPS_MERGE) -> PwaFunction1D:
    """PWA counterpart of :func:`canonicalize`."""
    coeffs = [(p.K, p.b) for p in pwa.pieces]
    runs = _merge_runs(pwa.pieces, coeffs, eps_merge)
    merged = []
    for run in runs:
        head = pwa.pieces[run[0]]
        region = Interval1D(head.region.lower, pwa.pieces[run[-1]].region.upper)
        merged.append(PwaPiece(region, head.K, head.b))
    return PwaFunction1D(merged)


def pwq_to_dict(pwq: PwqFunction1D) -> dict:
    return {
        "kind": "pwq",
        "pieces": [
            {"region": [p.region.lower, p.region.upper], "S": p.S, "l": p.l, "c": p.c}
            for p in pwq.pieces
        ],
    }


def pwq_from_dict(doc: dict) -> PwqFunction1D:
    return PwqFunction1D(
        PwqPiece(Interval1D(*p["region"]), float(p["S"]), float(p["l"]), float(p["c"]))
        for p in doc["pieces"]
    )


def pwa_to_dict(pwa: PwaFunction1D) -> dict:
    return {
        "kind": "pwa",
        "pieces": [
            {"region": [p.region.lower, p.region.upper], "K": p.K, "b": p.b}
            for p in pwa.pieces
        ],
    }


def pwa_from_dict(doc: dict) -> PwaFunction1D:
    return PwaFunction1D(
        PwaPiece(Interval1D(*p["region"]), float(p["K"]), float(p["b"]))
        for p in doc["pieces"]
    )
