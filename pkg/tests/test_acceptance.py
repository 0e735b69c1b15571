"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; tolerances are asserted exactly as stated, nothing is deferred.
"""

import itertools
import time

import numpy as np
import pytest

from latmin.checks import run_verification_suite
from latmin.cli import load_report, main, report_bytes
from latmin.decompose import (
    energy_identity_check,
    extract_bubbles,
    separation_check,
    synthesize_sequence,
)
from latmin.functionals import phi_bar, residual_norm
from latmin.lattice import LatticeBox, LatticeFunction, lp_norm
from latmin.minimize import lambda_bounds, minimize_constrained, radius_study

from conftest import make_params
from support_oracles import multistart_coordinate_descent_lambda0

GRID_BETAS = (0.1, 0.5, 1.0, 2.0, 10.0)
GRID_DIMS = (2, 3)
GRID_PQ = ((2.0, 3.0), (2.0, 4.0), (3.0, 5.0))


def report(line: str) -> None:
    print(f"\n[acceptance] {line}")


@pytest.fixture(scope="module")
def grid_runs():
    """One converged solve per (N, p, q, beta) grid point at R = 8."""
    runs = {}
    for dim, (p, q), beta in itertools.product(GRID_DIMS, GRID_PQ, GRID_BETAS):
        params = make_params(dim=dim, p=p, q=q, beta=beta)
        start = time.perf_counter()
        result = minimize_constrained(params, LatticeBox(dim, 8), tol=1e-8)
        elapsed = time.perf_counter() - start
        runs[(dim, p, q, beta)] = (params, result, elapsed)
    return runs


@pytest.fixture(scope="module")
def bubble_library():
    """Converged R = 8 solutions used as bubble profiles, tallest first."""
    out = []
    for beta in (0.5, 1.0, 2.0):
        params = make_params(beta=beta)
        res = minimize_constrained(params, LatticeBox(2, 8), tol=1e-9)
        assert res.converged
        out.append(res.u0)
    return out


def test_criterion_1_solver_matches_multistart_oracle(std_params):
    oracle = multistart_coordinate_descent_lambda0(n_starts=200, seed=230817)
    start = time.perf_counter()
    result = minimize_constrained(std_params, LatticeBox(2, 1), tol=1e-8)
    elapsed = time.perf_counter() - start
    gap = abs(result.lambda0 - oracle)
    ok = result.converged and gap <= 1e-8 and elapsed < 1.0
    report(
        f"criterion 1 {'PASS' if ok else 'FAIL'}: solver lambda0 vs 200-start "
        f"coordinate-descent oracle on the 5-site box: |gap| = {gap:.3e} "
        f"(<= 1e-8), solver runtime {elapsed:.3f}s (< 1s)"
    )
    assert result.converged
    assert gap <= 1e-8
    assert elapsed < 1.0


def test_criterion_2_lagrange_multiplier_bounds(grid_runs):
    worst_slack = np.inf
    for (dim, p, q, beta), (params, result, elapsed) in grid_runs.items():
        assert result.converged, (dim, p, q, beta)
        assert elapsed < 30.0, (dim, p, q, beta, elapsed)
        lo, hi = lambda_bounds(params)
        assert lo <= result.multiplier <= hi, (dim, p, q, beta)
        worst_slack = min(worst_slack, result.multiplier - lo, hi - result.multiplier)
    report(
        f"criterion 2 PASS: multiplier inside its exact bounds on all "
        f"{len(grid_runs)} grid runs (zero tolerance, worst slack "
        f"{worst_slack:.3e}); every run < 30s"
    )


def test_criterion_3_equation_residual(grid_runs):
    worst = 0.0
    for (dim, p, q, beta), (params, result, _) in grid_runs.items():
        el_params = params.with_constant_b(result.b_tilde)
        res = residual_norm(result.u0, el_params)
        assert res <= 1e-8, (dim, p, q, beta, res)
        worst = max(worst, res)
    report(
        f"criterion 3 PASS: Euler-Lagrange residual with b = lambda*q*beta "
        f"<= 1e-8 on all grid runs (worst {worst:.3e})"
    )


def test_criterion_4_strict_positivity(grid_runs):
    smallest = np.inf
    for key, (_, result, _) in grid_runs.items():
        assert bool(np.all(result.u0.values > 0.0)), key
        smallest = min(smallest, float(result.u0.values.min()))
    report(
        f"criterion 4 PASS: converged solutions strictly positive at every box "
        f"site in 100% of grid runs (smallest site value {smallest:.3e})"
    )


def test_criterion_5_truncation_convergence(std_params):
    rows = radius_study(std_params, [8, 12, 16], tol=1e-8)
    values = [row.lambda0 for row in rows]
    assert all(row.converged for row in rows)
    assert values[1] >= values[2], "lambda0 must be nonincreasing in R"
    assert values[0] >= values[1]
    rel = abs(values[1] - values[2]) / values[2]
    assert rel < 1e-3
    report(
        f"criterion 5 PASS: lambda0 nonincreasing over R in (8, 12, 16) and "
        f"|lambda0(12) - lambda0(16)| / lambda0(16) = {rel:.3e} < 1e-3"
    )


def test_criterion_6_b_tilde_spans_an_order_of_magnitude(grid_runs):
    # every emitted b respects its own bracket; the collection over
    # beta in [0.1, 10] spans at least a decade
    values = []
    for (dim, p, q, beta), (params, result, _) in grid_runs.items():
        lo, hi = lambda_bounds(params)
        assert q * beta * lo <= result.b_tilde <= q * beta * hi, (dim, p, q, beta)
        if dim == 2:
            values.append(result.b_tilde)
    span = max(values) / min(values)
    assert span >= 10.0
    report(
        f"criterion 6 PASS: emitted b values over beta in [0.1, 10] span a "
        f"factor {span:.2f} (>= 10) and every value sits inside its "
        f"q*beta-scaled bracket"
    )


def test_criterion_7_bubble_round_trip(std_params, bubble_library):
    worst_profile = 0.0
    worst_energy = 0.0
    directions = [(1, 0), (-1, 0), (0, 1)]
    for k in (1, 2, 3):
        bubbles = bubble_library[:k]
        tracks = [
            [(20 * n * dx, 20 * n * dy) for n in range(1, 5)]
            for dx, dy in directions[:k]
        ]
        boxes = [LatticeBox(2, 20 * n + 10) for n in range(1, 5)]
        zero = LatticeFunction.zeros(LatticeBox(2, 8))
        seq = synthesize_sequence(zero, bubbles, tracks, boxes)
        sigma = min(lp_norm(b, np.inf) for b in bubbles) / 10
        dec = extract_bubbles(seq, std_params, sigma=sigma, window=8)
        assert dec.k == k
        assert dec.center_tracks == tracks
        for got, expected in zip(dec.bubbles, bubbles):
            dist = float(np.max(np.abs(got.values - expected.values)))
            assert dist <= 1e-6
            worst_profile = max(worst_profile, dist)
        level = sum(phi_bar(b, std_params) for b in bubbles)
        defect = energy_identity_check(dec, std_params, level)
        assert defect <= 1e-8
        worst_energy = max(worst_energy, defect)
        assert separation_check(dec)
    report(
        f"criterion 7 PASS: round trips for k = 1, 2, 3 recovered every bubble "
        f"(worst profile sup-distance {worst_profile:.3e} <= 1e-6, centers "
        f"exact), energy defect <= 1e-8 (worst {worst_energy:.3e}), "
        f"separation checks true"
    )


def test_criterion_8_lemma_suite():
    reports = run_verification_suite(seed=20240809, random_trials=1000)
    by_name = {r.name: r for r in reports}
    for r in reports:
        assert r.passed, f"{r.name}: defect {r.defect} > tolerance {r.tolerance}"
    assert by_name["embedding"].witnesses["trials"] >= 1000
    assert by_name["embedding"].defect == 0.0
    assert by_name["interpolation"].defect == 0.0
    assert by_name["brezis_lieb_disjoint"].defect == 0.0
    assert by_name["brezis_lieb_perturbation"].defect <= 1e-10
    assert by_name["norm_equivalence"].defect == 0.0
    assert by_name["phi_phibar_gap"].defect == 0.0
    fd = by_name["gateaux_fd"]
    assert fd.witnesses["trials"] >= 100
    assert fd.witnesses["max_rel_err"] <= 1e-6
    report(
        "criterion 8 PASS: embedding/interpolation zero violations over 1000 "
        "random functions; Brezis-Lieb exact on disjoint supports and within "
        "1e-10 of the hand expansion; norm-equivalence ratios certified; "
        "energy gap within its tail bound; "
        f"{fd.witnesses['trials']} fd trials with max relative error "
        f"{fd.witnesses['max_rel_err']:.3e} <= 1e-6 and median error ratio "
        f"{fd.witnesses['median_err_ratio']:.1f} (second order)"
    )


def test_criterion_9_deterministic_reports(tmp_path, monkeypatch):
    monkeypatch.setenv("LATMIN_OUT_DIR", str(tmp_path))
    args = [
        "solve", "--radius", "4", "--seed", "11", "--out", str(tmp_path / "det.json"),
    ]
    assert main(args) == 0
    first = report_bytes(load_report(tmp_path / "det.json"), include_wall_time=False)
    assert main(args) == 0
    second = report_bytes(load_report(tmp_path / "det.json"), include_wall_time=False)
    assert first == second
    report(
        "criterion 9 PASS: repeated runs with identical config and seed produce "
        "byte-identical reports (wall time aside)"
    )
