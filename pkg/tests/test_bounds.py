import json
import math

import numpy as np
import pytest

from adiabound import (
    BasisSpec,
    BoundReport,
    Diagonal,
    ProjectorComplement,
    Schedule,
    StateVector,
    StepPolicy,
    basis_vector,
    beta_minimum,
    delta_ie,
    evolve,
    expectation,
    gap_scan,
    make_schedule,
    residual_norm,
    schedule_integral,
    t_min,
    to_dense,
    uniform_state,
    verify_distance_bound,
)
from adiabound import bounds

SEED = 20260825


def _grover_pieces(n):
    basis = BasisSpec.flat(n)
    start = uniform_state(basis)
    h_i = ProjectorComplement(basis, start.amps)
    h_p = ProjectorComplement(basis, basis_vector(basis, 0).amps)
    return h_i, h_p, start


# ---------------------------------------------------------------------------
# spread and the beta minimum
# ---------------------------------------------------------------------------

def test_delta_ie_projector_closed_form():
    # uniform start on a rank-one projector complement: std = sqrt(N-1)/N
    for n in (2, 4, 8, 64, 1024):
        _, h_p, start = _grover_pieces(n)
        assert delta_ie(start, h_p) == pytest.approx(math.sqrt(n - 1.0) / n, abs=1e-12)


def test_delta_ie_diagonal_hand_value():
    basis = BasisSpec.flat(4)
    h_p = Diagonal(basis, np.arange(4.0))
    assert delta_ie(uniform_state(basis), h_p) == pytest.approx(math.sqrt(1.25), rel=1e-12)


def test_residual_norm_hand_value():
    basis = BasisSpec.flat(4)
    h_p = Diagonal(basis, np.arange(4.0))
    # ||(diag - 1.5) * (1/2, ...)|| = sqrt(5)/2
    got = residual_norm(uniform_state(basis), h_p, 1.5)
    assert got == pytest.approx(math.sqrt(5.0) / 2.0, rel=1e-12)


def test_residual_identity_random_betas():
    # ||(H_P - beta) g_I||^2 - Delta^2 == (beta - <H_P>)^2
    rng = np.random.default_rng(SEED)
    cases = []
    _, h_p, start = _grover_pieces(8)
    cases.append((start, h_p))
    basis = BasisSpec.flat(12)
    amps = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    psi = StateVector(basis, amps / np.linalg.norm(amps))
    cases.append((psi, Diagonal(basis, rng.uniform(-2.0, 2.0, size=12))))
    for g_i, h_p in cases:
        mean = expectation(h_p, g_i)
        delta = delta_ie(g_i, h_p)
        for _ in range(100):
            beta = mean + rng.uniform(-3.0 * delta - 1.0, 3.0 * delta + 1.0)
            lhs = residual_norm(g_i, h_p, beta) ** 2 - delta ** 2
            assert lhs == pytest.approx((beta - mean) ** 2, abs=1e-9)


def test_beta_minimum_lands_on_mean():
    _, h_p, start = _grover_pieces(16)
    got = beta_minimum(start, h_p)
    delta = delta_ie(start, h_p)
    mean = expectation(h_p, start)
    assert got.h_p_mean == pytest.approx(mean, rel=1e-12)
    assert got.delta == pytest.approx(delta, rel=1e-12)
    assert abs(got.beta_star - mean) <= 0.02 * delta  # grid resolution
    assert delta <= got.value <= delta * (1.0 + 1e-4)


def test_beta_minimum_custom_grid():
    _, h_p, start = _grover_pieces(4)
    got = beta_minimum(start, h_p, beta_grid=np.array([0.0, 0.75, 2.0]))
    assert got.beta_star == 0.75  # exact mean is on the grid
    assert got.value == pytest.approx(delta_ie(start, h_p), rel=1e-12)
    with pytest.raises(ValueError):
        beta_minimum(start, h_p, beta_grid=np.array([]))


# ---------------------------------------------------------------------------
# t_min
# ---------------------------------------------------------------------------

def test_t_min_closed_forms():
    delta = math.sqrt(3.0) / 4.0  # the n=4 projector spread
    assert t_min("linear", delta) == pytest.approx(16.0 / math.sqrt(3.0), rel=1e-12)
    assert t_min("das_wei", delta, n=4) == pytest.approx(48.0 / (5.0 * math.sqrt(3.0)), rel=1e-12)
    assert t_min("das_wei", delta, n=4) == pytest.approx(5.542562584220408, rel=1e-12)


def test_t_min_validation():
    with pytest.raises(ValueError):
        t_min("linear", 0.0)
    with pytest.raises(ValueError):
        t_min("das_wei", 1.0)  # needs n


def test_t_min_generic_solves_the_integral_equation():
    delta = math.sqrt(3.0) / 4.0
    got = t_min("local_adiabatic_grover", delta, n=4)
    sch = make_schedule("local_adiabatic_grover", got, n=4)
    assert schedule_integral(sch, "g") == pytest.approx(2.0 / delta, rel=1e-9)
    # same solver on a kind with a known closed form agrees with it
    lin = t_min("linear", delta)
    assert schedule_integral(Schedule("linear", lin), "g") == pytest.approx(2.0 / delta, rel=1e-12)


# ---------------------------------------------------------------------------
# distance-bound audit
# ---------------------------------------------------------------------------

def test_distance_bound_holds_on_grover_runs():
    h_i, h_p, start = _grover_pieces(4)
    mean = expectation(h_p, start)
    delta = delta_ie(start, h_p)
    betas = [0.0, mean, mean - delta, mean + delta]
    for t_total in (1.0, 5.0, 20.0):
        sch = Schedule("linear", t_total)
        res = evolve(h_i, h_p, sch, StepPolicy(track_ground_overlap=False), psi0=start)
        rows = verify_distance_bound(res.state, start, 0.0, h_p, sch, betas)
        assert len(rows) == 4
        for row in rows:
            assert row.applicable
            assert row.slack >= bounds.SLACK_TOL
            assert row.cap_slack >= -1e-7  # distance never beats 2
            assert row.lhs == pytest.approx(row.distance / row.denominator, rel=1e-12)
            assert row.rhs == pytest.approx(t_total / 2.0, rel=1e-12)


def test_distance_bound_tightest_at_the_mean():
    # the spread minimizes the denominator, so beta = <H_P> gives the
    # largest lhs and the smallest slack of any beta
    h_i, h_p, start = _grover_pieces(4)
    mean = expectation(h_p, start)
    sch = Schedule("linear", 2.0)
    res = evolve(h_i, h_p, sch, StepPolicy(track_ground_overlap=False), psi0=start)
    rows = verify_distance_bound(res.state, start, 0.0, h_p, sch,
                                 [mean, mean + 0.5, mean - 0.5, 10.0])
    assert all(rows[0].slack <= r.slack + 1e-12 for r in rows)


def test_distance_bound_flags_vanishing_denominator():
    basis = BasisSpec.flat(4)
    start = uniform_state(basis)
    h_p = ProjectorComplement(basis, start.amps)  # start is its zero mode
    rows = verify_distance_bound(start, start, 0.0, h_p, Schedule("linear", 1.0), [0.0, 0.5])
    assert not rows[0].applicable  # H_P g_I = 0 and beta = 0
    assert math.isnan(rows[0].slack)
    assert math.isnan(rows[0].lhs)
    assert rows[1].applicable


def test_distance_bound_checks_basis():
    h_i, h_p, start = _grover_pieces(4)
    other = uniform_state(BasisSpec.flat(5))
    with pytest.raises(ValueError):
        verify_distance_bound(other, start, 0.0, h_p, Schedule("linear", 1.0), [0.0])


def test_bound_report_serialization():
    h_i, h_p, start = _grover_pieces(4)
    sch = Schedule("linear", 1.0)
    res = evolve(h_i, h_p, sch, StepPolicy(track_ground_overlap=False), psi0=start)
    margins = verify_distance_bound(res.state, start, 0.0, h_p, sch, [0.0, 0.75])
    delta = delta_ie(start, h_p)
    report = BoundReport(model="grover-4", schedule_kind="linear", t_total=1.0,
                         delta_ie=delta, integral_g=0.5, t_min=t_min("linear", delta),
                         beta_star=0.75, margins=margins)
    assert report.worst_slack() == min(m.slack for m in margins)

    blob = json.loads(report.to_json())
    assert blob["model"] == "grover-4"
    assert len(blob["margins"]) == 2
    assert blob["margins"][1]["applicable"] is True
    assert blob["theta_note"] == bounds.THETA_NOTE

    csv = report.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "beta,denominator,distance,lhs,rhs,slack,cap_slack,applicable"
    assert len(lines) == 3
    assert lines[1].endswith(",1")


def test_worst_slack_skips_inapplicable_rows():
    basis = BasisSpec.flat(4)
    start = uniform_state(basis)
    h_p = ProjectorComplement(basis, start.amps)
    margins = verify_distance_bound(start, start, 0.0, h_p, Schedule("linear", 1.0), [0.0])
    report = BoundReport(model="degenerate", schedule_kind="linear", t_total=1.0,
                         delta_ie=0.0, integral_g=0.5, t_min=math.inf,
                         beta_star=0.0, margins=margins)
    assert report.worst_slack() == math.inf


# ---------------------------------------------------------------------------
# gap scan
# ---------------------------------------------------------------------------

def test_gap_scan_grover_closed_form():
    h_i, h_p, _ = _grover_pieces(4)
    rep = gap_scan(h_i, h_p, Schedule("linear", 1.0))
    # two-level closed form: gap(s) = sqrt(1 - 4(1-1/N)s(1-s)), minimum 1/sqrt(N) at s=1/2
    assert rep.g_min == pytest.approx(0.5, abs=1e-6)
    assert rep.s_at_min == pytest.approx(0.5, abs=1e-6)
    want = np.sqrt(1.0 - 4.0 * 0.75 * rep.s_grid * (1.0 - rep.s_grid))
    assert np.allclose(rep.e1 - rep.e0, want, atol=1e-9)
    # ||H_P - H_I|| for two rank-one projectors: sqrt(1 - |<v|m>|^2)
    assert rep.dh_norm == pytest.approx(math.sqrt(3.0) / 2.0, abs=1e-8)
    assert rep.t_adb == pytest.approx(rep.dh_norm / rep.g_min ** 2, rel=1e-12)
    assert rep.t_adb == pytest.approx(2.0 * math.sqrt(3.0), abs=1e-5)


def test_gap_scan_matches_dense_oracle_pointwise():
    h_i, h_p, _ = _grover_pieces(4)
    sch = Schedule("linear", 1.0)
    rep = gap_scan(h_i, h_p, sch, grid=21, refine_rounds=1)
    dense_i, dense_p = to_dense(h_i), to_dense(h_p)
    for s, a, b in zip(rep.s_grid, rep.e0, rep.e1):
        evals = np.linalg.eigvalsh(sch.f(s) * dense_i + sch.g(s) * dense_p)
        assert a == pytest.approx(float(evals[0]), abs=1e-10)
        assert b == pytest.approx(float(evals[1]), abs=1e-10)


def test_gap_scan_iterative_path_matches_dense():
    h_i, h_p, _ = _grover_pieces(8)
    sch = Schedule("linear", 1.0)
    dense = gap_scan(h_i, h_p, sch, grid=9, refine_rounds=1)
    lanczos = gap_scan(h_i, h_p, sch, grid=9, refine_rounds=1, dense_limit=2)
    assert lanczos.g_min == pytest.approx(dense.g_min, abs=1e-8)
    assert np.allclose(lanczos.e0, dense.e0, atol=1e-8)
    assert np.allclose(lanczos.e1, dense.e1, atol=1e-8)


def test_gap_scan_validation_and_serialization():
    h_i, h_p, _ = _grover_pieces(4)
    with pytest.raises(ValueError):
        gap_scan(h_i, h_p, Schedule("linear", 1.0), grid=2)
    other = Diagonal(BasisSpec.flat(5), np.zeros(5))
    with pytest.raises(ValueError):
        gap_scan(h_i, other, Schedule("linear", 1.0))

    rep = gap_scan(h_i, h_p, Schedule("linear", 1.0), grid=11, refine_rounds=1)
    blob = json.loads(rep.to_json())
    assert blob["schedule_kind"] == "linear"
    assert len(blob["s_grid"]) == len(rep.s_grid)
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "s,e0,e1,gap"
    assert len(lines) == len(rep.s_grid) + 1
