"""Interpolation schedules and fixed-step unitary evolution.

The Hamiltonian path is H(t) = f(t) H_I + g(t) H_P on t in [0, T] with
f(0) = 1, f(T) = 0, g(0) = 0, g(T) = 1.  f + g = 1 is *not* assumed; the
das_wei schedule overshoots g = 1 mid-run and the step-size rule accounts
for that through the schedule's own maxima.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .hilbert import (
    HamiltonianOp,
    LinearCombination,
    StateVector,
    ground_state,
    to_dense,
)

__all__ = [
    "Schedule",
    "StepPolicy",
    "EvolutionResult",
    "make_schedule",
    "schedule_integral",
    "evolve",
    "reference_phase_state",
    "success_probability",
]

#: boundary conditions are enforced to this absolute tolerance
BOUNDARY_TOL = 1e-12
SCHEDULE_KINDS = ("linear", "das_wei", "local_adiabatic_grover")
#: densify H(t) for instantaneous-ground tracking only up to this dimension
_OVERLAP_DENSE_LIMIT = 512


@dataclass(frozen=True)
class Schedule:
    """One interpolation path.  Use :func:`make_schedule` to construct.

    kinds:
      linear                  f = 1 - t/T, g = t/T
      das_wei                 f = 1 - t/T, g = t/T + sqrt(n) (t/T)(1 - t/T)
      local_adiabatic_grover  s(t) advances at a rate proportional to the
                              squared two-level gap 1/n + 4(1-1/n)(s-1/2)^2;
                              f = 1 - s, g = s
    """

    kind: str
    t_total: float
    n: int | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not (math.isfinite(self.t_total) and self.t_total > 0):
            raise ValueError("total time must be positive and finite")
        if self.kind in ("das_wei", "local_adiabatic_grover"):
            if self.n is None or self.n < 2:
                raise ValueError(f"{self.kind} needs n >= 2")
        for name, val, want in (("f(0)", self.f(0.0), 1.0), ("f(T)", self.f(self.t_total), 0.0),
                                ("g(0)", self.g(0.0), 0.0), ("g(T)", self.g(self.t_total), 1.0)):
            if abs(val - want) > BOUNDARY_TOL:
                raise ValueError(f"schedule boundary {name} = {val!r}, expected {want}")

    # -- shape ----------------------------------------------------------

    def _x(self, t: float) -> float:
        return t / self.t_total

    def _s_local(self, t: float) -> float:
        root = math.sqrt(self.n - 1.0)
        theta0 = math.atan(root)
        theta = -theta0 + self._x(t) * 2.0 * theta0
        return 0.5 + math.tan(theta) / (2.0 * root)

    def f(self, t: float) -> float:
        if self.kind == "local_adiabatic_grover":
            return 1.0 - self._s_local(t)
        return 1.0 - self._x(t)

    def g(self, t: float) -> float:
        x = self._x(t)
        if self.kind == "linear":
            return x
        if self.kind == "das_wei":
            return x + math.sqrt(self.n) * x * (1.0 - x)
        return self._s_local(t)

    def _fg_table(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (f, g) at many times; same closed forms as f and g."""
        x = times / self.t_total
        if self.kind == "linear":
            return 1.0 - x, x.copy()
        if self.kind == "das_wei":
            return 1.0 - x, x + math.sqrt(self.n) * x * (1.0 - x)
        root = math.sqrt(self.n - 1.0)
        theta0 = math.atan(root)
        s = 0.5 + np.tan(-theta0 + x * (2.0 * theta0)) / (2.0 * root)
        return 1.0 - s, s

    def max_f(self) -> float:
        return 1.0  # f decreases from 1 for every kind

    def max_g(self) -> float:
        if self.kind == "das_wei":
            # stationary point of x + sqrt(n) x (1-x) at x = 1/2 + 1/(2 sqrt(n))
            r = math.sqrt(self.n)
            return (1.0 + r) ** 2 / (4.0 * r)
        return 1.0


def make_schedule(kind: str, t_total: float | None = None, *, n: int | None = None,
                  eps: float | None = None) -> Schedule:
    """Build a schedule; for local_adiabatic_grover with no explicit t_total,
    the sweep-rate constant eps fixes T = n*atan(sqrt(n-1))/(eps*sqrt(n-1))."""
    if t_total is None:
        if kind != "local_adiabatic_grover" or eps is None or n is None:
            raise ValueError("t_total is required unless eps fixes it for local_adiabatic_grover")
        if eps <= 0:
            raise ValueError("eps must be positive")
        root = math.sqrt(n - 1.0)
        t_total = n * math.atan(root) / (eps * root)
    return Schedule(kind=kind, t_total=float(t_total), n=n, eps=eps)


def schedule_integral(schedule: Schedule, component: str = "g") -> float:
    """Integral of f or g over [0, T]; closed form where one exists, adaptive
    quadrature otherwise."""
    if component not in ("f", "g"):
        raise ValueError("component must be 'f' or 'g'")
    t = schedule.t_total
    if schedule.kind == "linear":
        return 0.5 * t
    if schedule.kind == "das_wei":
        if component == "f":
            return 0.5 * t
        return t * (0.5 + math.sqrt(schedule.n) / 6.0)
    func = schedule.g if component == "g" else schedule.f
    val, err = quad(func, 0.0, t, epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > 1e-8 * max(1.0, abs(val)):
        raise RuntimeError(f"schedule quadrature error {err:.3e} too large")
    return float(val)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepPolicy:
    """Fixed-step RK4 controls.

    The step obeys h * B <= step_bound_factor with B the schedule-weighted
    operator-norm bound, shrinking further on long runs so the worst-case
    accumulated drift stays an order below norm_tol.  Norm drift past norm_tol
    aborts the run rather than silently renormalizing; opt into
    renormalization explicitly if wanted.
    """

    step_bound_factor: float = 0.1
    norm_tol: float = 1e-8
    samples_per_run: int = 256
    renormalize: bool = False
    track_ground_overlap: bool = True
    n_steps_override: int | None = None

    def __post_init__(self):
        if not 0 < self.step_bound_factor <= 1.0:
            raise ValueError("step_bound_factor must sit in (0, 1]")
        if self.norm_tol <= 0:
            raise ValueError("norm_tol must be positive")
        if self.samples_per_run < 0:
            raise ValueError("samples_per_run must be nonnegative")
        if self.n_steps_override is not None and self.n_steps_override < 1:
            raise ValueError("n_steps_override must be >= 1")


@dataclass
class EvolutionResult:
    state: StateVector          # final state, carrying its true (drifted) norm
    times: np.ndarray
    norms: np.ndarray
    ground_overlaps: np.ndarray  # |<ground(H(t))|psi(t)>|^2, NaN when not tracked
    n_steps: int
    h: float
    norm_bound: float
    max_drift: float
    renormalized: bool


def evolve(h_i: HamiltonianOp, h_p: HamiltonianOp, schedule: Schedule,
           policy: StepPolicy = StepPolicy(), psi0: StateVector | None = None) -> EvolutionResult:
    """Integrate i dpsi/dt = (f H_I + g H_P) psi from the ground state of H_I.

    Classical fixed-step RK4.  The state is never renormalized unless the
    policy says so; the drift it accumulates is the accuracy meter, and a
    drift beyond ``policy.norm_tol`` raises instead of passing silently.
    """
    if h_i.basis != h_p.basis:
        raise ValueError(f"operator bases differ: {h_i.basis} vs {h_p.basis}")
    if psi0 is None:
        psi0 = ground_state(h_i).state
    elif psi0.basis != h_i.basis:
        raise ValueError(f"initial state basis {psi0.basis} does not match {h_i.basis}")

    t_total = schedule.t_total
    bound = schedule.max_f() * h_i.norm_bound() + schedule.max_g() * h_p.norm_bound()
    if policy.n_steps_override is not None:
        n_steps = policy.n_steps_override
    else:
        # two caps on h: the stability rule h*B <= factor, and the accumulated
        # worst-case drift held at half of norm_tol.  A spectral component at
        # the instantaneous bound E(t) = f*B_I + g*B_P loses |R(ihE)| ~
        # 1 - (hE)^6/144 of its weight per RK4 step, so total drift is at most
        # (h^5/144) * (integral of E^6 dt + h*max(E)^6).
        h_stab = policy.step_bound_factor / bound if bound > 0.0 else t_total
        q = _drift_budget(schedule, h_i.norm_bound(), h_p.norm_bound(), h_stab)
        h_drift = (72.0 * policy.norm_tol / q) ** 0.2 if q > 0.0 else t_total
        n_steps = max(1, math.ceil(t_total / min(h_stab, h_drift)))
    h = t_total / n_steps

    sample_steps = _sample_steps(n_steps, policy.samples_per_run)
    track = policy.track_ground_overlap and h_i.basis.dim <= _OVERLAP_DENSE_LIMIT

    # stage schedule values precomputed for the whole run (stages at t, t+h/2, t+h)
    t_lo = np.arange(n_steps) * h
    f1s, g1s = (a.tolist() for a in schedule._fg_table(t_lo))
    f2s, g2s = (a.tolist() for a in schedule._fg_table(t_lo + 0.5 * h))
    f4s, g4s = (a.tolist() for a in schedule._fg_table(t_lo + h))

    psi = psi0.amps.astype(np.complex128, copy=True)
    times, norms, overlaps = [], [], []
    max_drift = 0.0

    def record(step: int) -> None:
        t = step * h
        nrm = math.sqrt(np.vdot(psi, psi).real)
        times.append(t)
        norms.append(nrm)
        overlaps.append(_ground_overlap(h_i, h_p, schedule, t, psi) if track else math.nan)

    def h_apply(ft: float, gt: float, v: np.ndarray) -> np.ndarray:
        return ft * h_i.apply_amps(v) + gt * h_p.apply_amps(v)

    if 0 in sample_steps:
        record(0)
    c_half, c_full, c_out = -0.5j * h, -1j * h, (-1j * h) / 6.0
    for step in range(n_steps):
        f2, g2 = f2s[step], g2s[step]
        m1 = h_apply(f1s[step], g1s[step], psi)
        m2 = h_apply(f2, g2, psi + c_half * m1)
        m3 = h_apply(f2, g2, psi + c_half * m2)
        m4 = h_apply(f4s[step], g4s[step], psi + c_full * m3)
        m1 += m4
        m2 += m3
        m1 += 2.0 * m2
        psi = psi + c_out * m1
        nrm = math.sqrt(np.vdot(psi, psi).real)
        max_drift = max(max_drift, abs(nrm - 1.0))
        if policy.renormalize:
            psi /= nrm
        elif abs(nrm - 1.0) > policy.norm_tol:
            raise RuntimeError(
                f"norm drift {abs(nrm - 1.0):.3e} exceeded {policy.norm_tol:.1e} at step "
                f"{step + 1}/{n_steps}; shrink step_bound_factor")
        if (step + 1) in sample_steps:
            record(step + 1)

    return EvolutionResult(
        state=StateVector(h_i.basis, psi, unnormalized=True),
        times=np.array(times),
        norms=np.array(norms),
        ground_overlaps=np.array(overlaps),
        n_steps=n_steps,
        h=h,
        norm_bound=bound,
        max_drift=max_drift,
        renormalized=policy.renormalize,
    )


def _drift_budget(schedule: Schedule, b_i: float, b_p: float, h_cap: float) -> float:
    """Upper bound on integral of E(t)^6 plus an h*max(E)^6 Riemann-sum guard,
    where E(t) = f(t) b_i + g(t) b_p dominates the instantaneous spectrum."""
    t = schedule.t_total
    if schedule.kind == "linear":
        # E runs linearly from b_i to b_p
        if abs(b_p - b_i) < 1e-12 * max(b_i, b_p, 1.0):
            integral = t * b_i ** 6
        else:
            integral = t * (b_p ** 7 - b_i ** 7) / (7.0 * (b_p - b_i))
        e_max = max(b_i, b_p)
    elif schedule.kind == "local_adiabatic_grover":
        e_max = max(b_i, b_p)  # f + g = 1 along this path
        integral = t * e_max ** 6
    else:
        e_max = schedule.max_f() * b_i + schedule.max_g() * b_p
        integral = t * e_max ** 6
    return integral + h_cap * e_max ** 6


def _sample_steps(n_steps: int, samples: int) -> set[int]:
    if samples == 0:
        return set()
    k = min(samples, n_steps)
    return {int(round(x)) for x in np.linspace(0, n_steps, k + 1)}


def _ground_overlap(h_i, h_p, schedule, t, psi) -> float:
    h_t = LinearCombination(h_i.basis, ((schedule.f(t), h_i), (schedule.g(t), h_p)))
    evals, evecs = np.linalg.eigh(to_dense(h_t))
    return float(abs(np.vdot(evecs[:, 0], psi)) ** 2)


# ---------------------------------------------------------------------------
# reference dynamics and readout
# ---------------------------------------------------------------------------

def reference_phase_state(g_i: StateVector, e_i0: float, schedule: Schedule,
                          beta: float) -> StateVector:
    """The comparison state: the initial ground state times the global phase
    exp(i xi(T)) with xi(T) = -(E_I0 * int f + beta * int g)."""
    xi = -(e_i0 * schedule_integral(schedule, "f") + beta * schedule_integral(schedule, "g"))
    return StateVector(g_i.basis, np.exp(1j * xi) * g_i.amps, unnormalized=g_i.unnormalized)


def success_probability(psi: StateVector, indices) -> float:
    """Total probability of the given basis indices (e.g. a degenerate argmin set)."""
    idx = np.asarray(list(indices), dtype=int)
    if idx.size == 0:
        raise ValueError("need at least one target index")
    if np.any(idx < 0) or np.any(idx >= psi.basis.dim):
        raise ValueError("target index outside basis")
    if len(np.unique(idx)) != idx.size:
        raise ValueError("duplicate target indices")
    return float(np.sum(np.abs(psi.amps[idx]) ** 2))
