"""Exact dynamic programming for 1-D constrained linear-quadratic MPC.

The solver computes, stage by stage, the optimal cost-to-go

    V_{k+1}(x) = min_u  Q*x^2 + R*u^2 + V_k(A*x + B*u)
                 s.t.   u in U,  A*x + B*u in dom(V_k),  x in X

starting from V_0(x) = P*x^2 on the terminal set T.  Each V_k is piecewise
quadratic and convex, and the minimizing input is piecewise affine; both are
obtained in closed form.

The parametric minimization is done by candidate enumeration, the 1-D
specialization of multiparametric QP: on each piece of V_k the minimizer is
either the interior stationary point of that piece's quadratic (affine in x),
an input clamped at a bound of U, or an input steering the successor onto a
bound of the piece.  Every candidate is admissible on an interval of states,
carries a quadratic cost there, and never undercuts the true optimum, so the
pointwise minimum of the admissible candidates *is* V_{k+1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import Infeasible, NonConvex, OutOfDomain
from .piecewise import (
    EPS_CONT,
    EPS_MERGE,
    Interval1D,
    PwaFunction1D,
    PwaPiece,
    PwqFunction1D,
    PwqPiece,
    _merge_runs,
)

#: Split points closer than this collapse into a single breakpoint.
_EPS_CLUSTER = 1e-9

#: Discriminants within this relative band of zero count as tangency.
_REL_DISC = 1e-10

#: Absolute clip: slightly negative discriminants are treated as zero.
_CLIP_DISC = -1e-12

#: Slack when testing whether a candidate covers an evaluation point.
_EPS_COVER = 2e-9

#: Constraint-membership tolerance used by the brute-force oracle.
_EPS_FEAS = 1e-9


@dataclass(frozen=True)
class MpcProblem1D:
    """Data of the finite-horizon constrained LQ optimal control problem.

    Scalar plant x+ = A*x + B*u, stage cost Q*x^2 + R*u^2, terminal cost
    P*x^2, state/input/terminal constraint intervals X, U, T, horizon N.
    """

    A: float
    B: float
    Q: float
    R: float
    P: float
    X: Interval1D
    U: Interval1D
    T: Interval1D
    N: int

    def __post_init__(self) -> None:
        for name in "ABQRP":
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.Q < 0.0 or self.P < 0.0:
            raise ValueError("state weights Q and P must be nonnegative")
        if self.R <= 0.0:
            raise ValueError("input weight R must be positive")
        if not self.X.contains_interval(self.T):
            raise ValueError("terminal set T must be contained in X")
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ValueError("horizon N must be a positive integer")

    def step(self, x: float, u: float) -> float:
        return self.A * x + self.B * u

    def stage_cost(self, x: float, u: float) -> float:
        return self.Q * x * x + self.R * u * u

    def terminal_cost(self, x: float) -> float:
        return self.P * x * x

    def with_horizon(self, n: int) -> "MpcProblem1D":
        return replace(self, N=n)


@dataclass(frozen=True)
class QFunctionSpec:
    """Q-function data: a problem plus the cost-to-go for one stage less.

    q(x, u) = Q*x^2 + R*u^2 + v_prev(A*x + B*u).  That v_prev really is the
    dynamic-programming value function for horizon N-1 is established by the
    oracle tests, not assumed here.
    """

    problem: MpcProblem1D
    v_prev: PwqFunction1D

    def feasible_states(self) -> Interval1D:
        """States from which some admissible input reaches dom(v_prev)."""
        return one_step_feasible(self.problem, self.v_prev.domain)


@dataclass(frozen=True)
class DpStageResult:
    """Value function, minimizing input law, and domain for one DP stage.

    The terminal stage has no input to choose, so its policy is None.
    """

    value: PwqFunction1D
    policy: PwaFunction1D | None
    feasible: Interval1D


def one_step_feasible(problem: MpcProblem1D, target: Interval1D) -> Interval1D:
    """States x in X for which some u in U puts A*x + B*u inside ``target``."""
    bu_lo = min(problem.B * problem.U.lower, problem.B * problem.U.upper)
    bu_hi = max(problem.B * problem.U.lower, problem.B * problem.U.upper)
    g_lo = target.lower - bu_hi
    g_hi = target.upper - bu_lo
    if problem.A > 0.0:
        reach = (g_lo / problem.A, g_hi / problem.A)
    elif problem.A < 0.0:
        reach = (g_hi / problem.A, g_lo / problem.A)
    else:
        if g_lo <= 0.0 <= g_hi:
            return problem.X
        raise Infeasible("A = 0 and no admissible input reaches the target set")
    lo = max(reach[0], problem.X.lower)
    hi = min(reach[1], problem.X.upper)
    if not lo < hi:
        raise Infeasible(f"empty feasible set: [{lo!r}, {hi!r}]")
    return Interval1D(lo, hi)


# --- candidate enumeration and lower envelope -------------------------------

@dataclass(frozen=True)
class _Candidate:
    """An affine input law u = K*x + b, admissible on [lo, hi], with the
    quadratic cost S*x^2 + l*x + c it incurs there."""

    lo: float
    hi: float
    S: float
    l: float
    c: float
    K: float
    b: float

    def value(self, x: float) -> float:
        return (self.S * x + self.l) * x + self.c


def _affine_preimage(coef: float, const: float, lo: float, hi: float):
    """Solve lo <= coef*x + const <= hi for x; None means empty."""
    if coef == 0.0:
        if lo - 1e-12 <= const <= hi + 1e-12:
            return (-math.inf, math.inf)
        return None
    a = (lo - const) / coef
    b = (hi - const) / coef
    return (a, b) if a <= b else (b, a)


def _candidates_for_piece(problem: MpcProblem1D, piece: PwqPiece, feasible: Interval1D):
    """All candidate input laws associated with one piece of V_k."""
    A, B, Q, R = problem.A, problem.B, problem.Q, problem.R
    S, l, c = piece.S, piece.l, piece.c
    region = piece.region

    laws = []
    denom = 2.0 * (R + S * B * B)
    laws.append((-(2.0 * S * A * B) / denom, -(l * B) / denom))  # interior stationary
    laws.append((0.0, problem.U.lower))                          # input at lower bound
    laws.append((0.0, problem.U.upper))                          # input at upper bound
    if B != 0.0:
        laws.append((-A / B, region.lower / B))                  # successor at piece lower bound
        laws.append((-A / B, region.upper / B))                  # successor at piece upper bound

    out = []
    for K, b in laws:
        lo, hi = feasible.lower, feasible.upper
        bounds = _affine_preimage(K, b, problem.U.lower, problem.U.upper)
        if bounds is None:
            continue
        lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
        aK = A + B * K
        bb = B * b
        bounds = _affine_preimage(aK, bb, region.lower, region.upper)
        if bounds is None:
            continue
        lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
        if not lo < hi:
            continue
        out.append(
            _Candidate(
                lo=lo,
                hi=hi,
                S=Q + R * K * K + S * aK * aK,
                l=2.0 * R * K * b + 2.0 * S * aK * bb + l * aK,
                c=R * b * b + S * bb * bb + l * bb + c,
                K=K,
                b=b,
            )
        )
    return out


def _crossing_points(f: _Candidate, g: _Candidate, lo: float, hi: float) -> list[float]:
    """Roots of f - g inside (lo, hi), with near-zero discriminants snapped
    to a double root (grazing tangency is the continuity case)."""
    dS = f.S - g.S
    dl = f.l - g.l
    dc = f.c - g.c
    roots: list[float] = []
    if abs(dS) < 1e-12:
        if abs(dl) > 1e-12:
            roots.append(-dc / dl)
    else:
        disc = dl * dl - 4.0 * dS * dc
        scale = max(dl * dl, abs(4.0 * dS * dc))
        if disc <= _REL_DISC * scale or disc <= 0.0:
            if disc >= -max(_REL_DISC * scale, -_CLIP_DISC):
                roots.append(-dl / (2.0 * dS))
        else:
            sq = math.sqrt(disc)
            q = -0.5 * (dl + math.copysign(sq, dl))
            roots.append(q / dS)
            if q != 0.0:
                roots.append(dc / q)
    return [r for r in roots if lo < r < hi]


def _split_points(candidates: list[_Candidate], domain: Interval1D) -> list[float]:
    pts = {domain.lower, domain.upper}
    for cand in candidates:
        if domain.lower < cand.lo < domain.upper:
            pts.add(cand.lo)
        if domain.lower < cand.hi < domain.upper:
            pts.add(cand.hi)
    for i, f in enumerate(candidates):
        for g in candidates[i + 1:]:
            lo = max(f.lo, g.lo, domain.lower)
            hi = min(f.hi, g.hi, domain.upper)
            if lo < hi:
                pts.update(_crossing_points(f, g, lo, hi))
    ordered = sorted(pts)
    # Cluster near-coincident split points; the outermost representatives are
    # pinned to the domain bounds so the domain never shrinks.
    clusters: list[float] = [ordered[0]]
    for p in ordered[1:]:
        if p - clusters[-1] > _EPS_CLUSTER:
            clusters.append(p)
    clusters[0] = domain.lower
    if len(clusters) == 1 or clusters[-1] < domain.upper - _EPS_CLUSTER:
        clusters.append(domain.upper)
    else:
        clusters[-1] = domain.upper
    return clusters


def _lower_envelope(candidates: list[_Candidate], domain: Interval1D):
    """Pointwise minimum of the candidates over the domain.

    Returns parallel piece lists for the value (S, l, c) and the input law
    (K, b), split so that a single candidate wins on each piece.
    """
    if not candidates:
        raise Infeasible("no admissible candidate on the feasible set")
    pts = _split_points(candidates, domain)
    value_pieces: list[PwqPiece] = []
    law_pieces: list[PwaPiece] = []
    for lo, hi in zip(pts, pts[1:]):
        mid = 0.5 * (lo + hi)
        best = None
        best_val = math.inf
        for cand in candidates:
            if cand.lo - _EPS_COVER <= mid <= cand.hi + _EPS_COVER:
                val = cand.value(mid)
                if val < best_val:
                    best, best_val = cand, val
        if best is None:
            raise NonConvex(
                f"no candidate covers x={mid!r}; candidate enumeration is broken"
            )
        region = Interval1D(lo, hi)
        value_pieces.append(PwqPiece(region, best.S, best.l, best.c))
        law_pieces.append(PwaPiece(region, best.K, best.b))
    return value_pieces, law_pieces


def _merge_stage(value_pieces, law_pieces, eps=EPS_MERGE):
    """Merge adjacent pieces only when value *and* law coefficients agree,
    so the value function and the policy keep a shared breakpoint set."""
    coeffs = [
        (v.S, v.l, v.c, w.K, w.b) for v, w in zip(value_pieces, law_pieces)
    ]
    runs = _merge_runs(value_pieces, coeffs, eps)
    values, laws = [], []
    for run in runs:
        head_v = value_pieces[run[0]]
        head_w = law_pieces[run[0]]
        region = Interval1D(head_v.region.lower, value_pieces[run[-1]].region.upper)
        values.append(PwqPiece(region, head_v.S, head_v.l, head_v.c))
        laws.append(PwaPiece(region, head_w.K, head_w.b))
    return PwqFunction1D(values), PwaFunction1D(laws)


def _check_stage(value: PwqFunction1D, stage: int) -> None:
    gap = value.max_continuity_gap()
    if gap > EPS_CONT:
        raise NonConvex(f"stage {stage}: continuity gap {gap:g} exceeds {EPS_CONT:g}")
    for piece in value.pieces:
        if piece.S < -1e-12:
            raise NonConvex(f"stage {stage}: negative curvature {piece.S!r}")
    for left, right in zip(value.pieces, value.pieces[1:]):
        b = left.region.upper
        if left.slope(b) > right.slope(b) + 1e-9:
            raise NonConvex(
                f"stage {stage}: slope decreases across breakpoint {b!r}"
            )


def dp_solve(problem: MpcProblem1D) -> list[DpStageResult]:
    """Solve the optimal control problem backwards over all stages.

    Returns stage results for horizons 0..N; entry k holds the cost-to-go
    V_k, its minimizing input law, and its domain (the k-step feasible set).
    """
    terminal = PwqFunction1D([PwqPiece(problem.T, problem.P, 0.0, 0.0)])
    results = [DpStageResult(terminal, None, problem.T)]
    for k in range(problem.N):
        prev = results[-1]
        feasible = one_step_feasible(problem, prev.value.domain)
        candidates = []
        for piece in prev.value.pieces:
            candidates.extend(_candidates_for_piece(problem, piece, feasible))
        value_pieces, law_pieces = _lower_envelope(candidates, feasible)
        value, policy = _merge_stage(value_pieces, law_pieces)
        _check_stage(value, k + 1)
        results.append(DpStageResult(value, policy, feasible))
    return results


# --- oracles ----------------------------------------------------------------

def _grid_costs(problem: MpcProblem1D, x: float, useq: np.ndarray):
    """Cost and feasibility of a batch of input sequences (rows of useq)."""
    xk = np.full(useq.shape[0], x)
    cost = np.zeros(useq.shape[0])
    feas = np.ones(useq.shape[0], dtype=bool)
    for k in range(useq.shape[1]):
        feas &= (xk >= problem.X.lower - _EPS_FEAS) & (xk <= problem.X.upper + _EPS_FEAS)
        uk = useq[:, k]
        cost += problem.Q * xk * xk + problem.R * uk * uk
        xk = problem.A * xk + problem.B * uk
    feas &= (xk >= problem.T.lower - _EPS_FEAS) & (xk <= problem.T.upper + _EPS_FEAS)
    cost += problem.P * xk * xk
    return cost, feas


def brute_force_value(
    problem: MpcProblem1D, x: float, grid: int, passes: int = 9
) -> float:
    """Numerically minimize the horizon cost by nested grid search.

    Each pass lays ``grid`` points per input over the current bracket,
    keeps the best constraint-satisfying sequence, and shrinks the bracket
    tenfold around it.  Returns math.inf when no sequence on the grid
    satisfies the constraints (the infeasibility sentinel).  Independent of
    the parametric solver; used to certify it.
    """
    if grid < 2:
        raise ValueError("grid needs at least two points per input")
    passes = max(3, passes)
    n_u = problem.N
    lo = np.full(n_u, problem.U.lower)
    hi = np.full(n_u, problem.U.upper)
    best = math.inf
    best_u: np.ndarray | None = None
    for _ in range(passes):
        axes = [np.linspace(lo[k], hi[k], grid) for k in range(n_u)]
        mesh = np.meshgrid(*axes, indexing="ij")
        useq = np.stack([m.ravel() for m in mesh], axis=1)
        cost, feas = _grid_costs(problem, x, useq)
        if feas.any():
            masked = np.where(feas, cost, math.inf)
            i = int(np.argmin(masked))
            if masked[i] < best:
                best = float(masked[i])
                best_u = useq[i].copy()
        if best_u is None:
            return math.inf
        width = (hi - lo) / 10.0
        center = np.clip(
            best_u, problem.U.lower + width / 2.0, problem.U.upper - width / 2.0
        )
        lo = center - width / 2.0
        hi = center + width / 2.0
    return best


def q_eval(spec: QFunctionSpec, x: float, u: float) -> float:
    """One-step cost plus optimal cost-to-go from the successor state."""
    problem = spec.problem
    if not problem.U.contains(u, tol=1e-12):
        raise OutOfDomain(f"input u={u!r} outside {problem.U}")
    successor = problem.step(x, u)
    return problem.stage_cost(x, u) + spec.v_prev(successor)


# --- interchange documents ---------------------------------------------------

def problem_to_dict(problem: MpcProblem1D) -> dict:
    return {
        "kind": "mpc_problem",
        "A": problem.A,
        "B": problem.B,
        "Q": problem.Q,
        "R": problem.R,
        "P": problem.P,
        "X": [problem.X.lower, problem.X.upper],
        "U": [problem.U.lower, problem.U.upper],
        "T": [problem.T.lower, problem.T.upper],
        "N": problem.N,
    }


def problem_from_dict(doc: dict) -> MpcProblem1D:
    if doc.get("kind") != "mpc_problem":
        raise ValueError(f"not a problem document (kind={doc.get('kind')!r})")
    return MpcProblem1D(
        A=float(doc["A"]),
        B=float(doc["B"]),
        Q=float(doc["Q"]),
        R=float(doc["R"]),
        P=float(doc["P"]),
        X=Interval1D(*doc["X"]),
        U=Interval1D(*doc["U"]),
        T=Interval1D(*doc["T"]),
        N=int(doc["N"]),
    )
