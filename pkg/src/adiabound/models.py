"""Reference models: marked-state search and three TSP Hamiltonian encodings.

Every builder returns a :class:`ModelBundle` holding the driver H_I with its
ground state g_I (always at energy 0), the problem Hamiltonian H_P, the target
index set (the full degenerate argmin, never a single representative), and an
energy budget.  Encodings:

  grover       flat N-dimensional search, H_I = 1-|u><u|, H_P = 1-|m><m|
  tsp-rank     one fock ladder; level n < M! carries the length of the tour
               with rank n+1, levels beyond carry l_max; H_I displaces a
               single mode by alpha with |alpha|^2 = M! by default
  tsp-tuple    M fock ladders; in-range occupation tuples (all digits < M)
               carry effective lengths, out-of-range levels carry l_max;
               H_I sums per-mode displacements with |alpha_i|^2 = M
  tsp-finite   flat M^M space: the tuple model restricted to in-range labels,
               with a uniform-superposition driver instead of displacements
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tsp
from .hilbert import (
    BasisSpec,
    CoherentPrep,
    CoherentQuadratic,
    Diagonal,
    HamiltonianOp,
    ModeSum,
    ProjectorComplement,
    StateVector,
    coherent_state,
    default_fock_cutoff,
    mode_digits,
    uniform_state,
)

__all__ = [
    "EnergyBudget",
    "ModelBundle",
    "AsymptoteRow",
    "AsymptoteReport",
    "build_grover",
    "build_tsp_rank",
    "build_tsp_tuple",
    "build_tsp_finite",
    "delta_ie_asymptote_study",
]

MODEL_KINDS = ("grover", "tsp-rank", "tsp-tuple", "tsp-finite")
#: diagonal entries within this relative distance of the minimum count as targets
DEGENERACY_RTOL = 1e-9
#: tuple-model product dimension guard
_TUPLE_DIM_BUDGET = 4_000_000
_GROVER_MAX_N = 1 << 20


@dataclass(frozen=True)
class EnergyBudget:
    """alpha_cost = sum of |alpha_i|^2 (0 when nothing is displaced) plus
    operator-norm bounds; the path bound is for any schedule with f, g <= 1,
    so schedules that overshoot must scale it by their own maxima."""

    alpha_cost: float
    h_i_norm_bound: float
    h_p_norm_bound: float

    @property
    def linear_path_norm_bound(self) -> float:
        return self.h_i_norm_bound + self.h_p_norm_bound


@dataclass
class ModelBundle:
    kind: str
    name: str
    h_i: HamiltonianOp
    h_p: HamiltonianOp
    g_i: StateVector
    e_i0: float
    target_indices: tuple[int, ...]
    target_energy: float
    degenerate_target: bool
    budget: EnergyBudget
    instance: tsp.TspInstance | None = None
    policy: tsp.DsqPolicy | None = None
    preps: tuple[CoherentPrep, ...] = ()
    delta_closed_form: float | None = None

    def decode(self, index: int):
        """Basis index -> problem label: the index itself (grover), a tour
        (tsp-rank), or an occupation tuple (tsp-tuple/finite).  None when the
        index lies beyond the encoded labels."""
        if not 0 <= index < self.h_p.basis.dim:
            raise ValueError(f"index {index} outside basis of dim {self.h_p.basis.dim}")
        if self.kind == "grover":
            return index
        m = self.instance.M
        if self.kind == "tsp-rank":
            return tsp.rank_to_tour(index + 1, m) if index < math.factorial(m) else None
        if self.kind == "tsp-tuple":
            digits = mode_digits(self.h_p.basis, index)
            return digits if max(digits) < m else None
        return tsp.index_to_tuple(index + 1, m)


def _argmin_set(values: np.ndarray) -> tuple[tuple[int, ...], float]:
    e0 = float(np.min(values))
    tol = DEGENERACY_RTOL * (1.0 + abs(e0))
    idx = tuple(int(i) for i in np.nonzero(values <= e0 + tol)[0])
    return idx, e0


def build_grover(n: int, marked: int = 0) -> ModelBundle:
    """Marked-state search over n flat labels."""
    if not 2 <= n <= _GROVER_MAX_N:
        raise ValueError(f"n must be in [2, {_GROVER_MAX_N}]")
    if not 0 <= marked < n:
        raise ValueError(f"marked index {marked} outside 0..{n - 1}")
    basis = BasisSpec.flat(n)
    g_i = uniform_state(basis)
    h_i = ProjectorComplement(basis, g_i.amps.copy())
    target = np.zeros(n, dtype=np.complex128)
    target[marked] = 1.0
    h_p = ProjectorComplement(basis, target)
    return ModelBundle(
        kind="grover", name=f"grover-n{n}", h_i=h_i, h_p=h_p, g_i=g_i, e_i0=0.0,
        target_indices=(marked,), target_energy=0.0, degenerate_target=False,
        budget=EnergyBudget(alpha_cost=0.0, h_i_norm_bound=1.0, h_p_norm_bound=1.0),
        delta_closed_form=math.sqrt(n - 1.0) / n,
    )


def build_tsp_rank(inst: tsp.TspInstance, alpha_sq: float | None = None,
                   n_max: int | None = None) -> ModelBundle:
    """Single-ladder encoding: level n <-> the tour of rank n+1 (n < M!)."""
    m = inst.M
    if m > 6:
        raise ValueError("rank encoding capped at 6 cities (ladder of ~M! levels)")
    nfact = math.factorial(m)
    if alpha_sq is None:
        alpha_sq = float(nfact)
    if not alpha_sq > 0:
        raise ValueError("alpha_sq must be positive")
    alpha = math.sqrt(alpha_sq)
    if n_max is None:
        n_max = default_fock_cutoff(alpha)
    if n_max < nfact - 1:
        raise ValueError(f"n_max={n_max} drops tour levels; need at least {nfact - 1}")
    prep = coherent_state(alpha, n_max)
    basis = prep.state.basis
    values = np.full(n_max + 1, inst.l_max)
    values[:nfact] = tsp.tour_lengths_by_rank(inst)
    h_p = Diagonal(basis, values)
    h_i = CoherentQuadratic(basis, alpha)
    target_idx, e0 = _argmin_set(values)
    return ModelBundle(
        kind="tsp-rank", name=f"tsp-rank-{inst.name}", h_i=h_i, h_p=h_p,
        g_i=prep.state, e_i0=0.0,
        target_indices=target_idx, target_energy=e0, degenerate_target=len(target_idx) > 1,
        budget=EnergyBudget(alpha_cost=alpha_sq, h_i_norm_bound=h_i.norm_bound(),
                            h_p_norm_bound=h_p.norm_bound()),
        instance=inst, preps=(prep,),
    )


def build_tsp_tuple(inst: tsp.TspInstance, alpha_sq_per_mode: float | None = None,
                    n_max: int | None = None,
                    policy: tsp.DsqPolicy = tsp.DsqPolicy()) -> ModelBundle:
    """M-ladder encoding with little-endian digit order: the occupation tuple
    (m_1, ..., m_M) sits at flat index sum_i m_i (n_max+1)^(i-1)."""
    m = inst.M
    if m > 4:
        raise ValueError("tuple encoding capped at 4 cities (product dimension)")
    if alpha_sq_per_mode is None:
        alpha_sq_per_mode = float(m)
    if not alpha_sq_per_mode > 0:
        raise ValueError("alpha_sq_per_mode must be positive")
    alpha = math.sqrt(alpha_sq_per_mode)
    if n_max is None:
        n_max = default_fock_cutoff(alpha)
    if n_max < m - 1:
        raise ValueError(f"n_max={n_max} cannot hold occupations up to {m - 1}")
    basis = BasisSpec.modes(m, n_max)
    if basis.dim > _TUPLE_DIM_BUDGET:
        raise ValueError(f"product dimension {basis.dim} exceeds budget {_TUPLE_DIM_BUDGET}")

    # every in-range tuple (all digits < M) carries its effective length;
    # everything touching levels >= M carries the plain ceiling
    values = np.full(basis.dim, inst.l_max)
    eff = tsp.effective_lengths_all(inst, policy)
    d = n_max + 1
    flats = np.zeros(m ** m, dtype=np.int64)
    scale = 1
    digits = tsp._digit_table(m).astype(np.int64)
    for i in range(m):
        flats += digits[:, i] * scale
        scale *= d
    values[flats] = eff
    h_p = Diagonal(basis, values)

    prep = coherent_state(alpha, n_max)
    h_i = ModeSum(basis, (complex(alpha),) * m)
    amps = np.array([1.0 + 0.0j])
    for _ in range(m):
        # mode 1 must vary fastest, so each new ladder goes on the slow side
        amps = np.kron(prep.state.amps, amps)
    g_i = StateVector(basis, amps)
    target_idx, e0 = _argmin_set(values)
    return ModelBundle(
        kind="tsp-tuple", name=f"tsp-tuple-{inst.name}", h_i=h_i, h_p=h_p,
        g_i=g_i, e_i0=0.0,
        target_indices=target_idx, target_energy=e0, degenerate_target=len(target_idx) > 1,
        budget=EnergyBudget(alpha_cost=alpha_sq_per_mode * m,
                            h_i_norm_bound=h_i.norm_bound(),
                            h_p_norm_bound=h_p.norm_bound()),
        instance=inst, policy=policy, preps=(prep,) * m,
    )


def build_tsp_finite(inst: tsp.TspInstance,
                     policy: tsp.DsqPolicy = tsp.DsqPolicy()) -> ModelBundle:
    """Flat M^M restriction of the tuple model with a uniform driver."""
    m = inst.M
    if m > 6:
        raise ValueError("finite encoding capped at 6 cities (M^M labels)")
    basis = BasisSpec.flat(m ** m)
    values = tsp.effective_lengths_all(inst, policy)
    h_p = Diagonal(basis, values)
    g_i = uniform_state(basis)
    h_i = ProjectorComplement(basis, g_i.amps.copy())
    target_idx, e0 = _argmin_set(values)
    return ModelBundle(
        kind="tsp-finite", name=f"tsp-finite-{inst.name}", h_i=h_i, h_p=h_p,
        g_i=g_i, e_i0=0.0,
        target_indices=target_idx, target_energy=e0, degenerate_target=len(target_idx) > 1,
        budget=EnergyBudget(alpha_cost=0.0, h_i_norm_bound=1.0,
                            h_p_norm_bound=h_p.norm_bound()),
        instance=inst, policy=policy,
    )


# ---------------------------------------------------------------------------
# spread asymptotics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoteRow:
    m: int
    delta_ie: float        # spread of H_P in the uniform start state
    non_tour_std: float    # spread over the penalty entries alone
    penalty_std_ref: float  # closed-form reference for the penalty spread
    ratio: float           # delta_ie / non_tour_std
    tour_fraction: float   # M!/M^M


@dataclass
class AsymptoteReport:
    rows: list[AsymptoteRow]
    policy: tsp.DsqPolicy

    def to_csv(self) -> str:
        lines = ["M,delta_ie,non_tour_std,penalty_std_ref,ratio,tour_fraction"]
        for r in self.rows:
            lines.append(f"{r.m},{r.delta_ie!r},{r.non_tour_std!r},{r.penalty_std_ref!r},"
                         f"{r.ratio!r},{r.tour_fraction!r}")
        return "\n".join(lines) + "\n"


def delta_ie_asymptote_study(m_values, policy: tsp.DsqPolicy = tsp.DsqPolicy(),
                             seed: int = 0,
                             sampler: tsp.DistanceSampler | None = None) -> AsymptoteReport:
    """How the uniform-state spread of the finite model approaches the spread
    of the penalty entries alone as the tour fraction M!/M^M dies off.

    One instance per size, drawn from the (seed, M, 0) stream.  For the parity
    policy the penalty entries alternate between l_max and 3*l_max, so the
    equal-weight closed-form reference is l_max itself; for the random policy
    it is sqrt(2)*sigma_d^2, the std of a squared centered normal.
    """
    rows = []
    for m in m_values:
        inst = tsp.random_instance(m, seed, sampler, stream=0)
        eff = tsp.effective_lengths_all(inst, policy)
        mask = tsp.tour_index_mask(m)
        # uniform start state: the spread is the population std of the diagonal
        delta = float(np.std(eff))
        non_tour = float(np.std(eff[~mask]))
        if policy.kind == "parity":
            ref = inst.l_max
        else:
            ref = math.sqrt(2.0) * policy.sigma_d ** 2
        rows.append(AsymptoteRow(
            m=m, delta_ie=delta, non_tour_std=non_tour, penalty_std_ref=ref,
            ratio=delta / non_tour,
            tour_fraction=math.factorial(m) / m ** m,
        ))
    return AsymptoteReport(rows=rows, policy=policy)
