"""Initial-spread time bounds, distance-inequality audits, and gap scans.

The central inequality: for evolution from the ground state g_I of H_I under
H(t) = f H_I + g H_P, the distance to the phase-only reference state obeys

    || psi(T) - phi(T) || / || (H_P - beta) g_I ||  <=  integral_0^T g dt

for every real beta, and the distance itself never exceeds 2.  Minimizing the
denominator over beta gives the initial spread Delta_I E = std of H_P in g_I,
hence a smallest credible time T_min from  integral_0^{T_min} g = 2 / Delta_I E.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .evolution import Schedule, make_schedule, reference_phase_state, schedule_integral
from .hilbert import (
    HamiltonianOp,
    LinearCombination,
    StateVector,
    expectation,
    to_dense,
    variance,
)

__all__ = [
    "BoundMargin",
    "BoundReport",
    "BetaMinimum",
    "GapReport",
    "delta_ie",
    "residual_norm",
    "beta_minimum",
    "t_min",
    "verify_distance_bound",
    "gap_scan",
]

#: any slack below this is an invariant violation, not roundoff
SLACK_TOL = -1e-7
#: fixed annotation copied into every BoundReport
THETA_NOTE = ("the intermediate time where g attains its mean value is not located; "
              "only T_min and the schedule integral are reported")
_DENSE_LIMIT = 2048


def delta_ie(g_i: StateVector, h_p: HamiltonianOp) -> float:
    """Standard deviation of H_P in the initial state (the initial spread)."""
    return math.sqrt(variance(h_p, g_i))


def residual_norm(g_i: StateVector, h_p: HamiltonianOp, beta: float) -> float:
    """|| (H_P - beta) g_I ||."""
    return float(np.linalg.norm(h_p.apply_amps(g_i.amps) - beta * g_i.amps))


@dataclass(frozen=True)
class BetaMinimum:
    beta_star: float
    value: float
    h_p_mean: float
    delta: float


def beta_minimum(g_i: StateVector, h_p: HamiltonianOp,
                 beta_grid: np.ndarray | None = None) -> BetaMinimum:
    """Grid minimum of beta -> ||(H_P - beta) g_I||.

    The default grid spans <H_P> +/- 3 spreads, where the algebraic minimum
    (value = spread at beta = <H_P>) is guaranteed to live.
    """
    mean = expectation(h_p, g_i)
    delta = delta_ie(g_i, h_p)
    if beta_grid is None:
        half = max(3.0 * delta, 1e-6 * (1.0 + abs(mean)))
        beta_grid = np.linspace(mean - half, mean + half, 601)
    beta_grid = np.asarray(beta_grid, dtype=float)
    if beta_grid.size == 0:
        raise ValueError("beta grid must be nonempty")
    values = np.array([residual_norm(g_i, h_p, b) for b in beta_grid])
    pos = int(np.argmin(values))
    return BetaMinimum(beta_star=float(beta_grid[pos]), value=float(values[pos]),
                       h_p_mean=mean, delta=delta)


def t_min(kind: str, delta: float, *, n: int | None = None,
          eps: float | None = None) -> float:
    """Smallest T with integral_0^T g = 2/delta for the given schedule family."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    target = 2.0 / delta
    if kind == "linear":
        return 2.0 * target
    if kind == "das_wei":
        if n is None or n < 2:
            raise ValueError("das_wei needs n >= 2")
        return target / (0.5 + math.sqrt(n) / 6.0)
    # generic schedules: the integral grows monotonically with T, so bracket and solve

    def shortfall(t: float) -> float:
        return schedule_integral(make_schedule(kind, t, n=n, eps=eps), "g") - target

    hi = target
    while shortfall(hi) < 0:
        hi *= 2.0
        if hi > 1e12 * target:
            raise RuntimeError("failed to bracket t_min")
    lo = 1e-12 * target
    return float(brentq(shortfall, lo, hi, xtol=1e-300, rtol=1e-14))


# ---------------------------------------------------------------------------
# distance-bound audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundMargin:
    beta: float
    denominator: float   # ||(H_P - beta) g_I||
    distance: float      # ||psi(T) - phi(T)||
    lhs: float           # distance / denominator
    rhs: float           # integral of g over [0, T]
    slack: float         # rhs - lhs, negative slack below SLACK_TOL is a violation
    cap_slack: float     # 2 - distance
    applicable: bool     # False when the denominator vanishes


def verify_distance_bound(final_state: StateVector, g_i: StateVector, e_i0: float,
                          h_p: HamiltonianOp, schedule: Schedule, betas,
                          denom_floor: float = 1e-12) -> list[BoundMargin]:
    """Audit the distance inequality for one evolved state over many betas.

    A vanishing denominator (g_I an eigenstate of H_P at beta) makes the ratio
    inapplicable; the row is kept but flagged rather than divided through.
    """
    if final_state.basis != g_i.basis:
        raise ValueError("final state and initial state live on different bases")
    rhs = schedule_integral(schedule, "g")
    hp_gi = h_p.apply_amps(g_i.amps)
    scale = max(1.0, float(np.linalg.norm(hp_gi)))
    rows = []
    for beta in betas:
        beta = float(beta)
        denom = float(np.linalg.norm(hp_gi - beta * g_i.amps))
        phi = reference_phase_state(g_i, e_i0, schedule, beta)
        dist = float(np.linalg.norm(final_state.amps - phi.amps))
        ok = denom > denom_floor * max(scale, abs(beta))
        lhs = dist / denom if ok else math.inf
        rows.append(BoundMargin(
            beta=beta, denominator=denom, distance=dist,
            lhs=lhs if ok else math.nan,
            rhs=rhs,
            slack=rhs - lhs if ok else math.nan,
            cap_slack=2.0 - dist,
            applicable=ok,
        ))
    return rows


@dataclass
class BoundReport:
    """One audited run: spread, schedule integral, implied T_min, margins."""

    model: str
    schedule_kind: str
    t_total: float
    delta_ie: float
    integral_g: float
    t_min: float
    beta_star: float
    margins: list[BoundMargin]
    theta_note: str = THETA_NOTE

    def worst_slack(self) -> float:
        vals = [m.slack for m in self.margins if m.applicable]
        return min(vals) if vals else math.inf

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_json_default)

    def to_csv(self) -> str:
        lines = ["beta,denominator,distance,lhs,rhs,slack,cap_slack,applicable"]
        for m in self.margins:
            lines.append(f"{m.beta!r},{m.denominator!r},{m.distance!r},{m.lhs!r},"
                         f"{m.rhs!r},{m.slack!r},{m.cap_slack!r},{int(m.applicable)}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# gap scan
# ---------------------------------------------------------------------------

@dataclass
class GapReport:
    schedule_kind: str
    t_total: float
    s_grid: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    g_min: float
    s_at_min: float
    t_adb: float       # max ||dH/ds|| / g_min^2, the usual adiabatic time proxy
    dh_norm: float     # ||H_P - H_I|| estimated by power iteration

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_json_default)

    def to_csv(self) -> str:
        lines = ["s,e0,e1,gap"]
        for s, a, b in zip(self.s_grid, self.e0, self.e1):
            lines.append(f"{s!r},{a!r},{b!r},{b - a!r}")
        return "\n".join(lines) + "\n"


def gap_scan(h_i: HamiltonianOp, h_p: HamiltonianOp, schedule: Schedule,
             grid: int = 201, refine_rounds: int = 3, refine_factor: int = 5,
             dense_limit: int = _DENSE_LIMIT) -> GapReport:
    """Lowest two levels of H(sT) over s in [0,1] with local refinement.

    The coarse grid is refined ``refine_rounds`` times around the running
    minimum, each round shrinking the step by ``refine_factor``.  Dense
    diagonalization below ``dense_limit`` dimensions, Lanczos-type
    lowest-two extraction above.
    """
    if grid < 3:
        raise ValueError("grid needs at least 3 points")
    if h_i.basis != h_p.basis:
        raise ValueError("operator bases differ")
    t_total = schedule.t_total
    cache: dict[float, tuple[float, float]] = {}

    def eval_at(s: float) -> tuple[float, float]:
        if s not in cache:
            h_s = LinearCombination(h_i.basis, ((schedule.f(s * t_total), h_i),
                                                (schedule.g(s * t_total), h_p)))
            cache[s] = _lowest_two(h_s, dense_limit)
        return cache[s]

    coarse = np.linspace(0.0, 1.0, grid)
    for s in coarse:
        eval_at(float(s))
    step = 1.0 / (grid - 1)
    for _ in range(refine_rounds):
        s_star = min(cache, key=lambda s: cache[s][1] - cache[s][0])
        lo = max(0.0, s_star - step)
        hi = min(1.0, s_star + step)
        step /= refine_factor
        for s in np.arange(lo, hi + 0.5 * step, step):
            eval_at(float(min(max(s, 0.0), 1.0)))

    s_sorted = np.array(sorted(cache))
    e0 = np.array([cache[s][0] for s in s_sorted])
    e1 = np.array([cache[s][1] for s in s_sorted])
    gaps = e1 - e0
    pos = int(np.argmin(gaps))
    g_min = float(gaps[pos])
    diff = LinearCombination(h_i.basis, ((-1.0, h_i), (1.0, h_p)))
    dh_norm = _spectral_norm(diff)
    t_adb = dh_norm / g_min ** 2 if g_min > 0 else math.inf
    return GapReport(schedule_kind=schedule.kind, t_total=t_total,
                     s_grid=s_sorted, e0=e0, e1=e1, g_min=g_min,
                     s_at_min=float(s_sorted[pos]), t_adb=t_adb, dh_norm=dh_norm)


def _lowest_two(op: HamiltonianOp, dense_limit: int) -> tuple[float, float]:
    dim = op.basis.dim
    if dim < 2:
        raise ValueError("need at least a 2-dimensional space")
    if dim <= dense_limit:
        evals = np.linalg.eigvalsh(to_dense(op, limit=max(dense_limit, dim)))
        return float(evals[0]), float(evals[1])
    linop = LinearOperator((dim, dim), matvec=lambda x: op.apply_amps(np.asarray(x).reshape(-1)),
                           dtype=np.complex128)
    rng = np.random.default_rng(13)
    last: Exception | None = None
    for _ in range(3):
        v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        try:
            evals = eigsh(linop, k=2, which="SA", v0=v0, tol=1e-10,
                          return_eigenvectors=False)
        except ArpackNoConvergence as exc:
            last = exc
            continue
        evals = np.sort(evals)
        return float(evals[0]), float(evals[1])
    raise RuntimeError(f"lowest-two extraction failed to converge: {last}")


def _spectral_norm(op: HamiltonianOp, iters: int = 500, tol: float = 1e-10,
                   seed: int = 11) -> float:
    """Power iteration on a Hermitian operator; converges to max |eigenvalue|."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.basis.dim) + 1j * rng.standard_normal(op.basis.dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = op.apply_amps(v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        if abs(nw - est) <= tol * max(1.0, nw):
            return nw
        est = nw
        v = w / nw
    return est


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")
