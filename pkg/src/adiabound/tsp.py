"""Closed-tour TSP instances, tour/tuple encodings, and exact tour statistics.

Everything here works on labeled closed tours: a tour visits each of the M
cities exactly once and returns to its start city, and the M cyclic rotations
of a visiting order count as distinct tours.  Nothing is quotiented out, so an
instance has exactly M! tours and ties between rotated copies are expected.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "Tour",
    "TspFormatError",
    "TspInstance",
    "DsqPolicy",
    "DistanceSampler",
    "BruteForceResult",
    "SigmaRow",
    "SigmaReport",
    "FractionRow",
    "FractionReport",
    "tour_length",
    "rank_to_tour",
    "tour_to_rank",
    "index_to_tuple",
    "tuple_to_index",
    "is_tour",
    "effective_length",
    "effective_lengths_all",
    "tour_index_mask",
    "tour_lengths_by_rank",
    "brute_force_shortest",
    "sigma_m",
    "sigma_scaling_study",
    "tour_fraction_decay",
    "random_instance",
    "parse_instance",
    "serialize_instance",
]

Tour = tuple[int, ...]

#: relative tolerance under which two tour lengths count as degenerate
DEGENERACY_RTOL = 1e-9
#: 20! is the largest factorial that fits a signed 64-bit rank
MAX_RANK_CITIES = 20
#: full tour enumeration budget (11! ~ 4.0e7 rows)
MAX_ENUM_CITIES = 11
#: safety factor of the penalty ceiling over the worst tour
LMAX_SAFETY = 1.1
#: above this M the penalty ceiling falls back to M * max(d)
_EXACT_LMAX_MAX_M = 10
_CHUNK = 1 << 20

_PERM_CACHE: dict[int, np.ndarray] = {}


class TspFormatError(ValueError):
    """Instance file rejected; `line` is the 1-based offending line if known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

def _validate_distances(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if d.shape[0] < 3:
        raise ValueError("an instance needs at least 3 cities")
    if not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite")
    if np.any(d < 0.0):
        raise ValueError("distances must be nonnegative")
    if np.any(np.diagonal(d) != 0.0):
        raise ValueError("the diagonal must be exactly zero")
    return d


@dataclass
class TspInstance:
    """Distance matrix plus the penalty ceiling ``l_max`` used for non-tours.

    ``l_max`` exceeds every tour length, so any state carrying it (or more)
    can never be mistaken for a tour.  Build instances via
    :meth:`from_distances` unless a specific ceiling is wanted.
    """

    d: np.ndarray
    l_max: float
    name: str = "tsp"

    def __post_init__(self):
        d = _validate_distances(self.d).copy()
        d.setflags(write=False)
        self.d = d
        self.l_max = float(self.l_max)
        if not (math.isfinite(self.l_max) and self.l_max > 0.0):
            raise ValueError("l_max must be positive and finite")

    @property
    def M(self) -> int:
        return self.d.shape[0]

    @classmethod
    def from_distances(cls, d, name: str = "tsp") -> "TspInstance":
        """Build an instance with ``l_max = 1.1 * (worst tour length)``.

        The worst tour is scanned exactly for M <= 10; beyond that the scan
        would need > 10! rows and the ceiling falls back to the weaker but
        safe bound ``1.1 * M * max(d)``.
        """
        d = _validate_distances(d)
        M = d.shape[0]
        if M <= _EXACT_LMAX_MAX_M:
            worst = max(float(np.max(lengths)) for lengths in _tour_length_chunks(d))
        else:
            worst = M * float(np.max(d))
        return cls(d=d, l_max=LMAX_SAFETY * worst, name=name)


@dataclass(frozen=True)
class DistanceSampler:
    """Entry-wise distance sampler.  kind: 'uniform' (low/high) or 'constant'."""

    kind: str = "uniform"
    low: float = 0.0
    high: float = 1.0
    value: float = 1.0
    symmetric: bool = False

    def __post_init__(self):
        if self.kind not in ("uniform", "constant"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "uniform" and not self.high > self.low:
            raise ValueError("uniform sampler needs high > low")

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "uniform":
            d = rng.uniform(self.low, self.high, size=(m, m))
        else:
            d = np.full((m, m), float(self.value))
        if self.symmetric:
            upper = np.triu(d, 1)
            d = upper + upper.T
        np.fill_diagonal(d, 0.0)
        return d


def random_instance(m: int, seed: int, sampler: DistanceSampler | None = None,
                    stream: int = 0, name: str | None = None) -> TspInstance:
    """Sample an instance from the stream keyed by (seed, m, stream)."""
    sampler = sampler or DistanceSampler()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(m, stream)))
    d = sampler.sample(m, rng)
    return TspInstance.from_distances(d, name=name or f"random-m{m}-s{seed}-{stream}")


# ---------------------------------------------------------------------------
# tours and encodings
# ---------------------------------------------------------------------------

def _check_tour(tour, m: int) -> None:
    if len(tour) != m:
        raise ValueError(f"tour has {len(tour)} cities, instance has {m}")
    if sorted(tour) != list(range(m)):
        raise ValueError(f"{tuple(tour)} is not a permutation of 0..{m - 1}")


def tour_length(inst: TspInstance, tour) -> float:
    """Length of the closed tour, including the return leg to the start city."""
    _check_tour(tour, inst.M)
    d = inst.d
    m = inst.M
    total = 0.0
    for j in range(m):
        total += float(d[tour[j], tour[(j + 1) % m]])
    return total


def _lengths_of(perms: np.ndarray, d: np.ndarray) -> np.ndarray:
    # same ascending-leg accumulation as tour_length, so values agree bit for bit
    n, m = perms.shape
    out = np.zeros(n)
    for j in range(m):
        out += d[perms[:, j], perms[:, (j + 1) % m]]
    return out


def _all_perms(m: int) -> np.ndarray:
    """All permutations of range(m) in lexicographic (rank) order, cached for m <= 9."""
    if m > 9:
        raise ValueError("permutation table capped at 9! rows; use the chunked scan")
    if m not in _PERM_CACHE:
        arr = np.array(list(itertools.permutations(range(m))), dtype=np.int8)
        arr.setflags(write=False)
        _PERM_CACHE[m] = arr
    return _PERM_CACHE[m]


def _perm_chunks(m: int):
    it = itertools.permutations(range(m))
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int8)


def _tour_length_chunks(d: np.ndarray):
    m = d.shape[0]
    if m <= 9:
        yield _lengths_of(_all_perms(m), d)
        return
    for perms in _perm_chunks(m):
        yield _lengths_of(perms, d)


def rank_to_tour(k: int, m: int) -> Tour:
    """Tour with 1-based lexicographic rank k among the m! permutations."""
    if not 3 <= m <= MAX_RANK_CITIES:
        raise ValueError(f"m must be in [3, {MAX_RANK_CITIES}], got {m}")
    nfact = math.factorial(m)
    if not 1 <= k <= nfact:
        raise ValueError(f"rank {k} outside [1, {m}!] = [1, {nfact}]")
    rem = k - 1
    pool = list(range(m))
    out = []
    for i in range(m - 1, -1, -1):
        digit, rem = divmod(rem, math.factorial(i))
        out.append(pool.pop(digit))
    return tuple(out)


def tour_to_rank(tour) -> int:
    """1-based lexicographic rank; inverse of :func:`rank_to_tour`."""
    m = len(tour)
    if m > MAX_RANK_CITIES:
        raise ValueError(f"ranks are exact only up to {MAX_RANK_CITIES} cities")
    _check_tour(tour, m)
    rank = 0
    pool = list(range(m))
    for i, city in enumerate(tour):
        pos = pool.index(city)
        rank += pos * math.factorial(m - 1 - i)
        pool.pop(pos)
    return rank + 1


def index_to_tuple(s: int, m: int) -> Tour:
    """Decode the 1-based state index into (m_1, ..., m_M), least significant first.

    The encoding is s = 1 + sum_i m_i * M**(i-1) with digits in 0..M-1, so the
    first component varies fastest as s increases.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not 1 <= s <= m ** m:
        raise ValueError(f"index {s} outside [1, {m}^{m}]")
    rem = s - 1
    digits = []
    for _ in range(m):
        digits.append(rem % m)
        rem //= m
    return tuple(digits)


def tuple_to_index(digits) -> int:
    """Inverse of :func:`index_to_tuple`; digits are base-M, least significant first."""
    m = len(digits)
    s = 0
    for i, dig in enumerate(digits):
        if not 0 <= dig < m:
            raise ValueError(f"component {dig} outside 0..{m - 1}")
        s += int(dig) * m ** i
    return s + 1


def is_tour(digits) -> bool:
    """True when the tuple visits every city exactly once."""
    return sorted(digits) == list(range(len(digits)))


# ---------------------------------------------------------------------------
# effective lengths (penalized non-tours)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DsqPolicy:
    """How the d**2 penalty surcharge of a non-tour index is produced.

    'parity' gives the deterministic ``(1 - (-1)**s) * l_max`` (0 for even s,
    2*l_max for odd s).  'random' squares one normal draw with standard
    deviation ``sigma_d``; the draw is a pure function of (seed, s) through a
    counter-based generator, so single values can be reproduced without
    generating any prefix.
    """

    kind: str = "parity"
    sigma_d: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("parity", "random"):
            raise ValueError(f"unknown d^2 policy {self.kind!r}")
        if self.kind == "random" and not self.sigma_d > 0:
            raise ValueError("random policy needs sigma_d > 0")

    def dsq(self, s: int, l_max: float) -> float:
        if self.kind == "parity":
            return 0.0 if s % 2 == 0 else 2.0 * l_max
        gen = np.random.Generator(np.random.Philox(key=self.seed, counter=s))
        draw = float(gen.normal(0.0, self.sigma_d))
        return draw * draw


def effective_length(inst: TspInstance, s: int, policy: DsqPolicy) -> float:
    """Tour length if index s encodes a tour, else ``d^2 + l_max``."""
    digits = index_to_tuple(s, inst.M)
    if is_tour(digits):
        return tour_length(inst, digits)
    return policy.dsq(s, inst.l_max) + inst.l_max


def _digit_table(m: int) -> np.ndarray:
    """(M^M, M) little-endian base-M digits of s-1 for s = 1..M^M."""
    if m > 8:
        raise ValueError("full M^M table capped at M = 8")
    count = m ** m
    digits = np.empty((count, m), dtype=np.int8)
    rem = np.arange(count)
    for i in range(m):
        digits[:, i] = rem % m
        rem //= m
    return digits


def tour_index_mask(m: int) -> np.ndarray:
    """Boolean mask over s = 1..M^M (position s-1): True where s encodes a tour."""
    digits = _digit_table(m)
    return (np.sort(digits, axis=1) == np.arange(m, dtype=np.int8)).all(axis=1)


def effective_lengths_all(inst: TspInstance, policy: DsqPolicy) -> np.ndarray:
    """Vector of effective lengths for s = 1..M^M (index s at position s-1)."""
    m = inst.M
    digits = _digit_table(m)
    count = digits.shape[0]
    tour_mask = (np.sort(digits, axis=1) == np.arange(m, dtype=np.int8)).all(axis=1)
    out = np.empty(count)
    out[tour_mask] = _lengths_of(digits[tour_mask], inst.d)
    non_idx = np.nonzero(~tour_mask)[0]
    if policy.kind == "parity":
        s_non = non_idx + 1
        out[non_idx] = np.where(s_non % 2 == 0, 0.0, 2.0 * inst.l_max) + inst.l_max
    else:
        out[non_idx] = [policy.dsq(int(i) + 1, inst.l_max) + inst.l_max for i in non_idx]
    return out


def tour_lengths_by_rank(inst: TspInstance) -> np.ndarray:
    """Tour lengths ordered by 1-based rank (position k-1 holds rank k)."""
    if inst.M > 9:
        raise ValueError("rank-ordered length table capped at 9 cities")
    return _lengths_of(_all_perms(inst.M), inst.d)


# ---------------------------------------------------------------------------
# exact enumeration statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    tour: Tour
    length: float
    tied_ranks: tuple[int, ...]  # every rank within DEGENERACY_RTOL of the optimum


def brute_force_shortest(inst: TspInstance) -> BruteForceResult:
    """Exact shortest closed tour; ties resolved to the smallest rank.

    ``tied_ranks`` lists every rank whose length matches the optimum within
    DEGENERACY_RTOL, so cyclic-rotation degeneracy stays visible.
    """
    m = inst.M
    if m > MAX_ENUM_CITIES:
        raise ValueError(f"brute force capped at {MAX_ENUM_CITIES} cities")
    if m <= 9:
        lengths = _lengths_of(_all_perms(m), inst.d)
        best_pos = int(np.argmin(lengths))
        best = float(lengths[best_pos])
        tol = DEGENERACY_RTOL * (1.0 + abs(best))
        ties = np.nonzero(lengths <= best + tol)[0] + 1
        return BruteForceResult(tour=tuple(int(c) for c in _all_perms(m)[best_pos]),
                                length=best, tied_ranks=tuple(int(r) for r in ties))
    # two passes keep memory flat for m in {10, 11}
    best = math.inf
    for lengths in _tour_length_chunks(inst.d):
        best = min(best, float(np.min(lengths)))
    tol = DEGENERACY_RTOL * (1.0 + abs(best))
    ties: list[int] = []
    offset = 0
    for perms in _perm_chunks(m):
        lengths = _lengths_of(perms, inst.d)
        for pos in np.nonzero(lengths <= best + tol)[0]:
            ties.append(offset + int(pos) + 1)
        offset += len(perms)
    best_tour = rank_to_tour(ties[0], m)
    return BruteForceResult(tour=best_tour, length=best, tied_ranks=tuple(ties))


def _sigma_from_d(d: np.ndarray) -> float:
    m = d.shape[0]
    if m <= 9:
        return float(np.std(_lengths_of(_all_perms(m), d)))
    # chunked two-pass population std
    total = 0.0
    count = 0
    for lengths in _tour_length_chunks(d):
        total += float(np.sum(lengths))
        count += len(lengths)
    mean = total / count
    sq = 0.0
    for lengths in _tour_length_chunks(d):
        sq += float(np.sum((lengths - mean) ** 2))
    return math.sqrt(sq / count)


def sigma_m(inst: TspInstance) -> float:
    """Population standard deviation of all M! closed-tour lengths."""
    if inst.M > MAX_ENUM_CITIES:
        raise ValueError(f"exact spread capped at {MAX_ENUM_CITIES} cities")
    return _sigma_from_d(inst.d)


@dataclass(frozen=True)
class SigmaRow:
    m: int
    samples: int
    sigma_mean: float
    sigma_stderr: float
    ratio_sqrtm: float


@dataclass
class SigmaReport:
    rows: list[SigmaRow]
    seed: int
    sampler: DistanceSampler

    def to_csv(self) -> str:
        lines = ["M,samples,sigma_mean,sigma_stderr,ratio_sqrtM"]
        for r in self.rows:
            lines.append(f"{r.m},{r.samples},{r.sigma_mean!r},{r.sigma_stderr!r},{r.ratio_sqrtm!r}")
        return "\n".join(lines) + "\n"


def sigma_scaling_study(sampler: DistanceSampler, m_values, samples: int,
                        seed: int) -> SigmaReport:
    """Mean tour-length spread over sampled instances, per instance size.

    Instance (m, idx) always draws from the stream keyed by (seed, m, idx),
    so rows are reproducible independently of iteration order.
    """
    if samples < 1:
        raise ValueError("need at least one sample per size")
    rows = []
    for m in m_values:
        if not 3 <= m <= MAX_ENUM_CITIES:
            raise ValueError(f"sizes must be in [3, {MAX_ENUM_CITIES}], got {m}")
        sigmas = np.empty(samples)
        for idx in range(samples):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(m, idx)))
            sigmas[idx] = _sigma_from_d(sampler.sample(m, rng))
        mean = float(np.mean(sigmas))
        stderr = float(np.std(sigmas, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        rows.append(SigmaRow(m=m, samples=samples, sigma_mean=mean,
                             sigma_stderr=stderr, ratio_sqrtm=mean / math.sqrt(m)))
    return SigmaReport(rows=rows, seed=seed, sampler=sampler)


@dataclass(frozen=True)
class FractionRow:
    m: int
    exact_ratio: float        # M! / M^M, exact integer arithmetic then one rounding
    stirling: float           # sqrt(2 pi M) * exp(-M)
    stirling_rel_dev: float
    sqrt_m_form: float        # exp(-M) / sqrt(M), the cruder closed form
    sqrt_m_form_rel_dev: float
    log_exact: float          # ln(M!/M^M) in log-space (no overflow for any M)


@dataclass
class FractionReport:
    rows: list[FractionRow]

    def to_csv(self) -> str:
        lines = ["M,exact_ratio,stirling,stirling_rel_dev,sqrt_m_form,sqrt_m_form_rel_dev,log_exact"]
        for r in self.rows:
            lines.append(f"{r.m},{r.exact_ratio!r},{r.stirling!r},{r.stirling_rel_dev!r},"
                         f"{r.sqrt_m_form!r},{r.sqrt_m_form_rel_dev!r},{r.log_exact!r}")
        return "\n".join(lines) + "\n"


def tour_fraction_decay(m_values) -> FractionReport:
    """How the tour fraction M!/M^M decays, against two closed forms.

    The exact ratio is computed in integer arithmetic (as a Fraction) for
    M <= 20 and in log-space beyond, never through a lossy factorial float.
    """
    rows = []
    for m in m_values:
        if m < 1:
            raise ValueError("sizes must be positive")
        log_exact = math.lgamma(m + 1) - m * math.log(m)
        if m <= 20:
            exact = float(Fraction(math.factorial(m), m ** m))
        else:
            exact = math.exp(log_exact)
        stirling = math.sqrt(2.0 * math.pi * m) * math.exp(-m)
        crude = math.exp(-m) / math.sqrt(m)
        rows.append(FractionRow(
            m=m,
            exact_ratio=exact,
            stirling=stirling,
            stirling_rel_dev=exact / stirling - 1.0,
            sqrt_m_form=crude,
            sqrt_m_form_rel_dev=exact / crude - 1.0,
            log_exact=log_exact,
        ))
    return FractionReport(rows=rows)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def parse_instance(path, fmt: str = "tsplib") -> TspInstance:
    """Load an instance file.  fmt is 'tsplib' (subset) or 'matrix'."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TspFormatError(f"cannot read {path}: {exc}") from exc
    if fmt == "tsplib":
        return _parse_tsplib(text, default_name=path.stem)
    if fmt == "matrix":
        return _parse_matrix(text, default_name=path.stem)
    raise ValueError(f"unknown instance format {fmt!r}")


def serialize_instance(inst: TspInstance) -> str:
    """Matrix-format text: first line M, then M whitespace-separated rows.

    Floats are written with repr, so parse(serialize(inst)) reproduces the
    distance matrix (and hence l_max) bit for bit.
    """
    lines = [str(inst.M)]
    for row in inst.d:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def _parse_matrix(text: str, default_name: str = "matrix") -> TspInstance:
    tokens: list[tuple[str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        for tok in stripped.split():
            tokens.append((tok, lineno))
    if not tokens:
        raise TspFormatError("empty matrix file")
    head, head_line = tokens[0]
    try:
        m = int(head)
    except ValueError:
        raise TspFormatError(f"first value must be the city count, got {head!r}",
                             line=head_line) from None
    if m < 3:
        raise TspFormatError(f"city count must be >= 3, got {m}", line=head_line)
    need = m * m
    body = tokens[1:]
    if len(body) != need:
        where = body[-1][1] if body else head_line
        raise TspFormatError(f"expected {need} matrix entries, found {len(body)}", line=where)
    d = np.empty((m, m))
    for pos, (tok, lineno) in enumerate(body):
        try:
            val = float(tok)
        except ValueError:
            raise TspFormatError(f"bad number {tok!r}", line=lineno) from None
        i, j = divmod(pos, m)
        if val < 0:
            raise TspFormatError(f"negative distance d[{i}][{j}] = {val}", line=lineno)
        if i == j and val != 0.0:
            raise TspFormatError(f"nonzero diagonal d[{i}][{i}] = {val}", line=lineno)
        d[i, j] = val
    return TspInstance.from_distances(d, name=default_name)


_TSPLIB_SECTIONS = ("EDGE_WEIGHT_SECTION", "NODE_COORD_SECTION", "EOF")


def _parse_tsplib(text: str, default_name: str = "tsplib") -> TspInstance:
    lines = text.splitlines()
    header: dict[str, tuple[str, int]] = {}
    i = 0
    section = None
    section_line = 0
    while i < len(lines):
        stripped = lines[i].strip()
        if not stripped:
            i += 1
            continue
        keyword = stripped.split(":")[0].strip().upper()
        if keyword in _TSPLIB_SECTIONS:
            section = keyword
            section_line = i + 1
            i += 1
            break
        if ":" not in stripped:
            raise TspFormatError(f"expected 'KEY : value', got {stripped!r}", line=i + 1)
        key, _, val = stripped.partition(":")
        header[key.strip().upper()] = (val.strip(), i + 1)
        i += 1

    def need(key: str) -> tuple[str, int]:
        if key not in header:
            raise TspFormatError(f"missing required header {key}")
        return header[key]

    type_val, type_line = need("TYPE")
    if type_val.upper() != "TSP":
        raise TspFormatError(f"TYPE must be TSP, got {type_val!r}", line=type_line)
    dim_val, dim_line = need("DIMENSION")
    try:
        m = int(dim_val)
    except ValueError:
        raise TspFormatError(f"DIMENSION must be an integer, got {dim_val!r}",
                             line=dim_line) from None
    if m < 3:
        raise TspFormatError(f"DIMENSION must be >= 3, got {m}", line=dim_line)
    ewt_val, ewt_line = need("EDGE_WEIGHT_TYPE")
    ewt = ewt_val.upper()
    if ewt not in ("EXPLICIT", "EUC_2D"):
        raise TspFormatError(f"unsupported EDGE_WEIGHT_TYPE {ewt_val!r}", line=ewt_line)
    name = header.get("NAME", (default_name, 0))[0] or default_name

    if section is None:
        raise TspFormatError("no data section found")

    if ewt == "EXPLICIT":
        fmt_val, fmt_line = need("EDGE_WEIGHT_FORMAT")
        if fmt_val.upper() != "FULL_MATRIX":
            raise TspFormatError(f"unsupported EDGE_WEIGHT_FORMAT {fmt_val!r}", line=fmt_line)
        if section != "EDGE_WEIGHT_SECTION":
            raise TspFormatError(f"EXPLICIT instance needs EDGE_WEIGHT_SECTION, got {section}",
                                 line=section_line)
        entries: list[tuple[float, int]] = []
        while i < len(lines):
            stripped = lines[i].strip()
            if stripped.upper() == "EOF":
                break
            if stripped:
                for tok in stripped.split():
                    try:
                        entries.append((float(tok), i + 1))
                    except ValueError:
                        raise TspFormatError(f"bad number {tok!r}", line=i + 1) from None
            i += 1
        if len(entries) != m * m:
            where = entries[-1][1] if entries else section_line
            raise TspFormatError(f"expected {m * m} weights, found {len(entries)}", line=where)
        d = np.empty((m, m))
        for pos, (val, lineno) in enumerate(entries):
            r, c = divmod(pos, m)
            if val < 0:
                raise TspFormatError(f"negative distance d[{r}][{c}] = {val}", line=lineno)
            if r == c and val != 0.0:
                raise TspFormatError(f"nonzero diagonal d[{r}][{r}] = {val}", line=lineno)
            d[r, c] = val
        return TspInstance.from_distances(d, name=name)

    # EUC_2D
    if section != "NODE_COORD_SECTION":
        raise TspFormatError(f"EUC_2D instance needs NODE_COORD_SECTION, got {section}",
                             line=section_line)
    coords: dict[int, tuple[float, float]] = {}
    while i < len(lines):
        stripped = lines[i].strip()
        if stripped.upper() == "EOF":
            break
        if stripped:
            parts = stripped.split()
            if len(parts) != 3:
                raise TspFormatError(f"expected 'index x y', got {stripped!r}", line=i + 1)
            try:
                idx = int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise TspFormatError(f"bad node line {stripped!r}", line=i + 1) from None
            if not 1 <= idx <= m:
                raise TspFormatError(f"node index {idx} outside 1..{m}", line=i + 1)
            if idx in coords:
                raise TspFormatError(f"duplicate node index {idx}", line=i + 1)
            coords[idx] = (x, y)
        i += 1
    if len(coords) != m:
        raise TspFormatError(f"expected {m} nodes, found {len(coords)}", line=section_line)
    pts = np.array([coords[k] for k in range(1, m + 1)])
    diff = pts[:, None, :] - pts[None, :, :]
    # nearest-integer rounding, floor(x + 0.5), as the format defines it
    d = np.floor(np.sqrt(np.sum(diff * diff, axis=2)) + 0.5)
    np.fill_diagonal(d, 0.0)
    return TspInstance.from_distances(d, name=name)
