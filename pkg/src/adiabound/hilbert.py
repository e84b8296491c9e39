"""State vectors and structured Hermitian operators with matrix-free action.

Operators never materialize their full matrix during normal use; each
representation knows how to act on an amplitude vector and how to bound its
own operator norm.  ``to_dense`` exists for small-dimension scans and tests.

Mode ordering convention: for a multi-mode basis the flat index is the
little-endian mixed-radix number of the per-mode occupations, i.e. mode 1
varies fastest.  ``mode_digits``/``mode_flat`` are the only places that
arithmetic lives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

__all__ = [
    "BasisSpec",
    "StateVector",
    "Diagonal",
    "ProjectorComplement",
    "CoherentQuadratic",
    "ModeSum",
    "LinearCombination",
    "GroundState",
    "CoherentPrep",
    "basis_vector",
    "uniform_state",
    "mode_digits",
    "mode_flat",
    "apply",
    "expectation",
    "variance",
    "coherent_state",
    "default_fock_cutoff",
    "ground_state",
    "to_dense",
]

#: states must carry unit norm within this unless explicitly flagged
NORM_TOL = 1e-10
#: two eigenvalues this close (relative) count as degenerate
DEGENERACY_RTOL = 1e-9
#: hard cap on matrix-vector products per iterative eigensolve
MATVEC_BUDGET = 10_000


@dataclass(frozen=True)
class BasisSpec:
    """Labelled computational basis: 'flat' indices, one 'fock' ladder, or
    a tensor product of identical fock ladders ('modes')."""

    kind: str
    dims: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("flat", "fock", "modes"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError("basis dims must be positive")
        if self.kind in ("flat", "fock") and len(self.dims) != 1:
            raise ValueError(f"{self.kind} basis takes a single dimension")
        if self.kind == "modes" and len(set(self.dims)) != 1:
            raise ValueError("mode ladders must share one per-mode dimension")

    @staticmethod
    def flat(n: int) -> "BasisSpec":
        return BasisSpec("flat", (int(n),))

    @staticmethod
    def fock(n_max: int) -> "BasisSpec":
        return BasisSpec("fock", (int(n_max) + 1,))

    @staticmethod
    def modes(n_modes: int, n_max: int) -> "BasisSpec":
        return BasisSpec("modes", (int(n_max) + 1,) * int(n_modes))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def n_max(self) -> int:
        if self.kind == "flat":
            raise ValueError("flat basis has no occupation cutoff")
        return self.dims[0] - 1


def mode_digits(basis: BasisSpec, flat: int) -> tuple[int, ...]:
    """Per-mode occupations of a flat index, mode 1 first (fastest)."""
    if not 0 <= flat < basis.dim:
        raise ValueError(f"flat index {flat} outside basis of dim {basis.dim}")
    d = basis.dims[0]
    out = []
    rem = flat
    for _ in range(basis.n_modes):
        out.append(rem % d)
        rem //= d
    return tuple(out)


def mode_flat(basis: BasisSpec, digits) -> int:
    """Inverse of :func:`mode_digits`."""
    if len(digits) != basis.n_modes:
        raise ValueError(f"expected {basis.n_modes} digits, got {len(digits)}")
    d = basis.dims[0]
    flat = 0
    for i, dig in enumerate(digits):
        if not 0 <= dig < d:
            raise ValueError(f"occupation {dig} outside 0..{d - 1}")
        flat += int(dig) * d ** i
    return flat


@dataclass
class StateVector:
    """Complex amplitudes over a basis.  Unit norm is enforced at build time
    unless ``unnormalized=True`` (evolved states carry their true norm)."""

    basis: BasisSpec
    amps: np.ndarray
    unnormalized: bool = False

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=np.complex128)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"amplitudes shape {amps.shape} does not match basis dim {self.basis.dim}")
        self.amps = amps
        if not self.unnormalized and abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {self.norm()!r} is not 1 within {NORM_TOL}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def inner(self, other: "StateVector") -> complex:
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amps, other.amps))

    def overlap_sq(self, other: "StateVector") -> float:
        return abs(self.inner(other)) ** 2

    def dump(self) -> str:
        """Plain-text amplitudes: one 'index re im' row per basis state."""
        lines = []
        for i, a in enumerate(self.amps):
            lines.append(f"{i} {float(a.real)!r} {float(a.imag)!r}")
        return "\n".join(lines) + "\n"


def _check_same_basis(a: BasisSpec, b: BasisSpec) -> None:
    if a != b:
        raise ValueError(f"basis mismatch: {a} vs {b}")


def basis_vector(basis: BasisSpec, index: int) -> StateVector:
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(basis, amps)


def uniform_state(basis: BasisSpec) -> StateVector:
    amps = np.full(basis.dim, 1.0 / math.sqrt(basis.dim), dtype=np.complex128)
    return StateVector(basis, amps)


# ---------------------------------------------------------------------------
# operator representations
# ---------------------------------------------------------------------------

class HamiltonianOp:
    """Base class; subclasses are Hermitian by construction."""

    basis: BasisSpec

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def norm_bound(self) -> float:
        """Cheap upper bound on the operator 2-norm."""
        raise NotImplementedError


@dataclass(frozen=True)
class Diagonal(HamiltonianOp):
    basis: BasisSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.basis.dim,):
            raise ValueError(f"diagonal shape {values.shape} does not match basis dim {self.basis.dim}")
        if not np.all(np.isfinite(values)):
            raise ValueError("diagonal entries must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        return self.values * amps

    def norm_bound(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class ProjectorComplement(HamiltonianOp):
    """1 - |v><v| for a unit vector v."""

    basis: BasisSpec
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.complex128)
        if vec.shape != (self.basis.dim,):
            raise ValueError(f"vector shape {vec.shape} does not match basis dim {self.basis.dim}")
        if abs(np.linalg.norm(vec) - 1.0) > NORM_TOL:
            raise ValueError("projector axis must be a unit vector")
        vec = vec.copy()
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        return amps - self.vector * np.vdot(self.vector, amps)

    def norm_bound(self) -> float:
        return 1.0


def _ladder_factors(dim: int) -> np.ndarray:
    # sqrt(1..dim-1): entry n-1 is the matrix element between |n-1> and |n>
    return np.sqrt(np.arange(1, dim, dtype=float))


def _cq_apply_cube(alpha: complex, sq: np.ndarray, cube: np.ndarray) -> np.ndarray:
    """(a† - conj(alpha)) (a - alpha) on the middle axis of an (H, D, L) block."""
    u = -alpha * cube
    u[:, :-1, :] += sq[None, :, None] * cube[:, 1:, :]
    out = -np.conj(alpha) * u
    out[:, 1:, :] += sq[None, :, None] * u[:, :-1, :]
    return out


@dataclass(frozen=True)
class CoherentQuadratic(HamiltonianOp):
    """(a† - conj(alpha))(a - alpha) on a truncated fock ladder.

    The truncated a and a† stay exact adjoints, so the operator is Hermitian
    and positive semidefinite at any cutoff; only the near-zero ground energy
    inherits the truncation tail.
    """

    basis: BasisSpec
    alpha: complex

    def __post_init__(self):
        if self.basis.kind != "fock":
            raise ValueError("CoherentQuadratic lives on a fock basis")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "_sq", _ladder_factors(self.basis.dim))

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        amps = np.asarray(amps, dtype=np.complex128)
        cube = amps.reshape(1, self.basis.dim, 1)
        return _cq_apply_cube(self.alpha, self._sq, cube).reshape(-1)

    def norm_bound(self) -> float:
        return (math.sqrt(self.basis.n_max) + abs(self.alpha)) ** 2


@dataclass(frozen=True)
class ModeSum(HamiltonianOp):
    """Sum over modes of per-mode CoherentQuadratic terms on a product basis."""

    basis: BasisSpec
    alphas: tuple[complex, ...]

    def __post_init__(self):
        if self.basis.kind != "modes":
            raise ValueError("ModeSum lives on a modes basis")
        alphas = tuple(complex(a) for a in self.alphas)
        if len(alphas) != self.basis.n_modes:
            raise ValueError(f"expected {self.basis.n_modes} alphas, got {len(alphas)}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "_sq", _ladder_factors(self.basis.dims[0]))

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        d = self.basis.dims[0]
        dim = self.basis.dim
        amps = np.asarray(amps, dtype=np.complex128)
        out = np.zeros(dim, dtype=np.complex128)
        low = 1
        for alpha in self.alphas:
            cube = amps.reshape(dim // (low * d), d, low)
            out += _cq_apply_cube(alpha, self._sq, cube).reshape(dim)
            low *= d
        return out

    def norm_bound(self) -> float:
        root = math.sqrt(self.basis.n_max)
        return sum((root + abs(a)) ** 2 for a in self.alphas)


@dataclass(frozen=True)
class LinearCombination(HamiltonianOp):
    """Real linear combination of Hermitian operators on one basis."""

    basis: BasisSpec
    terms: tuple[tuple[float, HamiltonianOp], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("need at least one term")
        for coeff, op in self.terms:
            _check_same_basis(self.basis, op.basis)
            if not math.isfinite(coeff):
                raise ValueError("coefficients must be finite reals")

    def apply_amps(self, amps: np.ndarray) -> np.ndarray:
        out = np.zeros(self.basis.dim, dtype=np.complex128)
        for coeff, op in self.terms:
            if coeff != 0.0:
                out += coeff * op.apply_amps(amps)
        return out

    def norm_bound(self) -> float:
        return sum(abs(c) * op.norm_bound() for c, op in self.terms)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def apply(op: HamiltonianOp, psi: StateVector) -> StateVector:
    _check_same_basis(op.basis, psi.basis)
    return StateVector(psi.basis, op.apply_amps(psi.amps), unnormalized=True)


def expectation(op: HamiltonianOp, psi: StateVector) -> float:
    """<psi|H|psi> for a normalized state; rejects a visible imaginary part."""
    _check_same_basis(op.basis, psi.basis)
    val = complex(np.vdot(psi.amps, op.apply_amps(psi.amps)))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary residue {val.imag!r}; operator not Hermitian?")
    return val.real


def variance(op: HamiltonianOp, psi: StateVector) -> float:
    """<H^2> - <H>^2 via the applied vector's norm; clamped at zero."""
    _check_same_basis(op.basis, psi.basis)
    h_psi = op.apply_amps(psi.amps)
    mean = complex(np.vdot(psi.amps, h_psi))
    if abs(mean.imag) > 1e-10 * max(1.0, abs(mean.real)):
        raise ValueError(f"expectation has imaginary residue {mean.imag!r}; operator not Hermitian?")
    second = float(np.real(np.vdot(h_psi, h_psi)))
    return max(second - mean.real ** 2, 0.0)


def default_fock_cutoff(alpha: complex) -> int:
    """Occupation cutoff that keeps the coherent tail far below 1e-10."""
    a = abs(alpha)
    return math.ceil(a * a + 10.0 * a + 10.0)


@dataclass
class CoherentPrep:
    """Truncated coherent state plus its truncation accounting."""

    state: StateVector
    n_max: int
    captured_mass: float
    tail_mass: float
    renorm_factor: float


def coherent_state(alpha: complex, n_max: int | None = None,
                   tail_tol: float = 1e-10) -> CoherentPrep:
    """Coherent state of displacement alpha on a fock ladder cut at n_max.

    Amplitudes come from the closed form exp(-|a|^2/2) a^n / sqrt(n!), built in
    log space so large |alpha| cannot overflow, then renormalized over the kept
    levels.  If the discarded tail mass exceeds ``tail_tol`` the call fails and
    names the smallest sufficient cutoff.
    """
    alpha = complex(alpha)
    if n_max is None:
        n_max = default_fock_cutoff(alpha)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    mu = abs(alpha) ** 2
    tail = float(stats.poisson.sf(n_max, mu)) if mu > 0 else 0.0
    if tail > tail_tol:
        needed = n_max
        while float(stats.poisson.sf(needed, mu)) > tail_tol:
            needed = max(needed + 1, int(needed * 1.25))
        raise ValueError(
            f"coherent tail mass {tail:.3e} above {tail_tol:.1e} at n_max={n_max}; "
            f"n_max={needed} suffices")
    n = np.arange(n_max + 1)
    if mu > 0:
        log_mag = -0.5 * mu + n * math.log(abs(alpha)) - 0.5 * np.array(
            [math.lgamma(k + 1) for k in n])
        amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    else:
        amps = np.zeros(n_max + 1, dtype=np.complex128)
        amps[0] = 1.0
    captured = float(np.sum(np.abs(amps) ** 2))
    renorm = 1.0 / math.sqrt(captured)
    state = StateVector(BasisSpec.fock(n_max), amps * renorm)
    return CoherentPrep(state=state, n_max=n_max, captured_mass=captured,
                        tail_mass=tail, renorm_factor=renorm)


# ---------------------------------------------------------------------------
# ground states
# ---------------------------------------------------------------------------

@dataclass
class GroundState:
    energy: float
    state: StateVector
    residual: float
    degenerate: bool
    degenerate_indices: tuple[int, ...] = ()
    matvecs: int = 0


def ground_state(op: HamiltonianOp) -> GroundState:
    """Lowest eigenpair. Structured cases are exact; everything else runs an
    iterative Lanczos-type solve against the matrix-free apply."""
    if isinstance(op, Diagonal):
        values = op.values
        pos = int(np.argmin(values))
        e0 = float(values[pos])
        tol = DEGENERACY_RTOL * (1.0 + abs(e0))
        ties = tuple(int(i) for i in np.nonzero(values <= e0 + tol)[0])
        return GroundState(energy=e0, state=basis_vector(op.basis, pos), residual=0.0,
                           degenerate=len(ties) > 1, degenerate_indices=ties)
    if isinstance(op, ProjectorComplement):
        # |v> is the unique zero mode; the rest of the spectrum sits at 1
        return GroundState(energy=0.0, state=StateVector(op.basis, op.vector.copy()),
                           residual=0.0, degenerate=False)
    return _iterative_ground(op)


def _iterative_ground(op: HamiltonianOp) -> GroundState:
    dim = op.basis.dim
    count = 0

    def matvec(x):
        nonlocal count
        count += 1
        if count > MATVEC_BUDGET:
            raise _BudgetExceeded
        return op.apply_amps(np.asarray(x, dtype=np.complex128).reshape(-1))

    if dim <= 16:
        # ARPACK wants k < dim and a healthy Krylov basis; tiny spaces go dense
        dense = to_dense(op)
        evals, evecs = np.linalg.eigh(dense)
        e0 = float(evals[0])
        vec = evecs[:, 0]
        gap = float(evals[1] - evals[0]) if dim > 1 else math.inf
        residual = float(np.linalg.norm(op.apply_amps(vec) - e0 * vec))
        return GroundState(energy=e0, state=StateVector(op.basis, vec), residual=residual,
                           degenerate=gap <= DEGENERACY_RTOL * (1.0 + abs(e0)), matvecs=dim)

    linop = LinearOperator((dim, dim), matvec=matvec, dtype=np.complex128)
    rng = np.random.default_rng(7)
    last_err: Exception | None = None
    for attempt in range(3):
        v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        try:
            evals, evecs = eigsh(linop, k=2, which="SA", v0=v0,
                                 tol=1e-10, maxiter=MATVEC_BUDGET)
        except _BudgetExceeded:
            raise RuntimeError(f"iterative ground state exceeded {MATVEC_BUDGET} matvecs") from None
        except ArpackNoConvergence as exc:
            last_err = exc  # stagnated; restart from a fresh vector
            continue
        order = np.argsort(evals)
        e0 = float(evals[order[0]])
        e1 = float(evals[order[1]])
        vec = evecs[:, order[0]]
        vec = vec / np.linalg.norm(vec)
        residual = float(np.linalg.norm(op.apply_amps(vec) - e0 * vec))
        return GroundState(energy=e0, state=StateVector(op.basis, vec), residual=residual,
                           degenerate=(e1 - e0) <= DEGENERACY_RTOL * (1.0 + abs(e0)),
                           matvecs=count)
    raise RuntimeError(f"iterative ground state failed to converge after restarts: {last_err}")


class _BudgetExceeded(Exception):
    pass


def to_dense(op: HamiltonianOp, limit: int = 4096) -> np.ndarray:
    """Materialize the matrix by applying to basis columns (small dims only)."""
    dim = op.basis.dim
    if dim > limit:
        raise ValueError(f"refusing to densify dim {dim} > {limit}")
    out = np.empty((dim, dim), dtype=np.complex128)
    e = np.zeros(dim, dtype=np.complex128)
    for j in range(dim):
        e[j] = 1.0
        out[:, j] = op.apply_amps(e)
        e[j] = 0.0
    return out
