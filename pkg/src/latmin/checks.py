"""Executable numerical checks for the analytic toolbox behind the solver.

Each check measures a defect against a stated tolerance and reports witnesses
(seeds, worst inputs) for replay.  All "limit" statements are tested as exact
finite statements or monotone defects; nothing asymptotic is asserted beyond
the final-term defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import median

import numpy as np

from .coefficients import CoefficientField
from .decompose import FunctionSequence
from .functionals import ProblemParams, gateaux_gradient, phi, phi_bar
from .lattice import (
    LatticeBox,
    LatticeFunction,
    delta,
    epq_norm,
    gradient_norm_sq,
    lp_norm,
    place,
)

FD_REL_TOL = 1e-6
# Accepted band for the h-refinement error ratio, log10 distance from the ideal
# second-order value of 100.  The h = 1e-5 truncation term sits below the float
# noise floor of the energy sums, which compresses observed ratios from 100 down
# to ~15-50; a first-order defect still lands at <= 10 and fails the band.
FD_ORDER_LOG10_WINDOW = 0.9


@dataclass
class CheckReport:
    """Outcome of one numerical check: passed iff defect <= tolerance."""

    name: str
    defect: float
    tolerance: float
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.defect <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "defect": self.defect,
            "tolerance": self.tolerance,
            "witnesses": self.witnesses,
        }


def random_function(box: LatticeBox, rng: np.random.Generator) -> LatticeFunction:
    """Values i.i.d. uniform on [-1, 1] over the box."""
    return LatticeFunction(box, rng.uniform(-1.0, 1.0, box.site_count))


def dyadic_random_function(box: LatticeBox, rng: np.random.Generator) -> LatticeFunction:
    """Random values on the grid k/16, k in [-16, 16].

    Small powers and sums of such values are exact in double precision, which
    lets disjoint-support additivity checks demand a defect of exactly zero.
    """
    return LatticeFunction(box, rng.integers(-16, 17, box.site_count) / 16.0)


def _power_sum(u: LatticeFunction, p: float) -> float:
    """sum |u|^p, computed without the root-then-power round trip of lp_norm."""
    return float(np.sum(np.abs(u.values) ** p))


def brezis_lieb_defect(
    seq: FunctionSequence, u: LatticeFunction, p: float, gradient_variant: bool = False
) -> float:
    """|(N(u_last) - N(u_last - u)) - N(u)| for N = |.|_p^p (or |grad .|_2^2)."""
    if p < 1:
        raise ValueError(f"brezis_lieb_defect requires p >= 1, got {p}")
    last = seq.terms[-1]
    u_on_box = place(u, (0,) * last.box.dim, last.box)
    diff = last - u_on_box
    if gradient_variant:
        return abs(gradient_norm_sq(last) - gradient_norm_sq(diff) - gradient_norm_sq(u))
    return abs(_power_sum(last, p) - _power_sum(diff, p) - _power_sum(u, p))


def norm_equivalence_ratio(
    u: LatticeFunction, p: float, q: float, a: CoefficientField, b: CoefficientField
) -> tuple[float, tuple[float, float]]:
    """Weighted-over-unweighted energy norm ratio and its certified interval.

    The interval combines the per-site extremes of a^(1/p) and b^(1/q) over
    the box with the untouched gradient term; the ratio always lies inside.
    """
    plain = epq_norm(u, p, q)
    if plain == 0.0:
        raise ValueError("norm equivalence ratio needs a nonzero function")
    ratio = epq_norm(u, p, q, a, b) / plain
    wa = a.values_on(u.box) ** (1.0 / p)
    wb = b.values_on(u.box) ** (1.0 / q)
    c1 = min(1.0, float(wa.min()), float(wb.min()))
    c2 = max(1.0, float(wa.max()), float(wb.max()))
    return ratio, (c1, c2)


def lions_decay_check(seq: FunctionSequence, p: float, q: float) -> CheckReport:
    """Per-term interpolation bound |u_n|_q^q <= |u_n|_p^p |u_n|_inf^(q-p).

    Also checks the implied decay: with the sequence-wide sup of |.|_p^p as M,
    each term obeys |u_n|_q <= (M |u_n|_inf^(q-p))^(1/q).  The defect is the
    worst relative violation of either inequality.
    """
    if not p < q:
        raise ValueError(f"lions_decay_check requires p < q, got p={p}, q={q}")
    worst = 0.0
    worst_term = None
    mass_bound = max(lp_norm(t, p) ** p for t in seq.terms)
    for n, term in enumerate(seq.terms):
        lhs = lp_norm(term, q) ** q
        rhs = lp_norm(term, p) ** p * lp_norm(term, np.inf) ** (q - p)
        viol = (lhs - rhs) / max(lhs, 1e-300)
        decay_lhs = lp_norm(term, q)
        decay_rhs = (mass_bound * lp_norm(term, np.inf) ** (q - p)) ** (1.0 / q)
        viol = max(viol, (decay_lhs - decay_rhs) / max(decay_lhs, 1e-300))
        if viol > worst:
            worst, worst_term = viol, n
    return CheckReport(
        name="lions_decay",
        defect=max(0.0, worst),
        tolerance=1e-12,
        witnesses={"p": p, "q": q, "terms": len(seq.terms), "worst_term": worst_term},
    )


def _fd_trial(
    u: LatticeFunction, params: ProblemParams, direction: LatticeFunction
) -> tuple[float, float | None]:
    """One central-difference comparison: (worst relative error, error ratio)."""
    analytic = float(np.dot(gateaux_gradient(u, params).values, direction.values))
    # the pairing can cancel to near zero for random directions, so measure the
    # error against the O(1) characteristic scale rather than the cancelled value
    scale = max(1.0, abs(analytic))
    errs = []
    max_rel = 0.0
    for h in (1e-4, 1e-5):
        plus = LatticeFunction(u.box, u.values + h * direction.values)
        minus = LatticeFunction(u.box, u.values - h * direction.values)
        fd = (phi(plus, params) - phi(minus, params)) / (2 * h)
        err = abs(fd - analytic)
        errs.append(err)
        max_rel = max(max_rel, err / scale)
    ratio = errs[0] / errs[1] if errs[1] > 0 else None
    return max_rel, ratio


def _fd_report(max_rel: float, ratios: list[float], witnesses: dict) -> CheckReport:
    order_defect = abs(np.log10(median(ratios)) - 2.0) if ratios else 0.0
    witnesses = dict(witnesses)
    witnesses["max_rel_err"] = max_rel
    witnesses["median_err_ratio"] = median(ratios) if ratios else None
    return CheckReport(
        name="gateaux_fd",
        defect=max(max_rel / FD_REL_TOL, order_defect / FD_ORDER_LOG10_WINDOW),
        tolerance=1.0,
        witnesses=witnesses,
    )


def fd_gradient_check(
    u: LatticeFunction, params: ProblemParams, trials: int, seed: int = 0
) -> CheckReport:
    """Central finite differences of the energy versus the analytic gradient.

    For random box-supported directions and h in {1e-4, 1e-5}, the defect is
    max(rel_err / 1e-6, |log10(err ratio) - 2| / window) with tolerance 1:
    passing means every relative error is at most 1e-6 and the median error
    ratio between the two h values sits near the second-order value of 100.
    """
    if trials < 1:
        raise ValueError("fd_gradient_check needs at least one trial")
    rng = np.random.default_rng(seed)
    max_rel = 0.0
    ratios = []
    for _ in range(trials):
        rel, ratio = _fd_trial(u, params, random_function(u.box, rng))
        max_rel = max(max_rel, rel)
        if ratio is not None:
            ratios.append(ratio)
    return _fd_report(max_rel, ratios, {"seed": seed, "trials": trials})


def phi_phibar_gap(u: LatticeFunction, params: ProblemParams) -> tuple[float, float]:
    """|Phi(u) - PhiBar(u)| and its analytic tail bound.

    The bound is tail_deviation(a, R) |u|_p^p / p + tail_deviation(b, R) |u|_q^q / q
    with R one less than the innermost support radius; it always dominates the
    gap since every support site lies outside B_R.
    """
    gap = abs(phi(u, params) - phi_bar(u, params))
    support = u.support()
    if not support:
        return gap, 0.0
    inner = min(sum(map(abs, s)) for s in support) - 1

    def deviation(coeff: CoefficientField) -> float:
        if inner >= 1:
            return coeff.tail_deviation(inner)
        return max((abs(d) for d in coeff.profile.values()), default=0.0)

    bound = (
        deviation(params.a) * lp_norm(u, params.p) ** params.p / params.p
        + deviation(params.b) * lp_norm(u, params.q) ** params.q / params.q
    )
    return gap, bound


# ---------------------------------------------------------------------------
# The full verification suite (backs the `verify` subcommand)
# ---------------------------------------------------------------------------

_PQ_GRID = ((2.0, 3.0), (2.0, 4.0), (3.0, 5.0))
_DIMS = (2, 3)


def _embedding_checks(seed: int, trials: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    emb_worst = 0.0
    interp_worst = 0.0
    for i in range(trials):
        box = LatticeBox(_DIMS[i % 2], 4)
        p, q = _PQ_GRID[i % 3]
        u = random_function(box, rng)
        np_, nq = lp_norm(u, p), lp_norm(u, q)
        emb_worst = max(emb_worst, nq - np_)
        interp_worst = max(
            interp_worst, nq**q - np_**p * lp_norm(u, np.inf) ** (q - p)
        )
    common = {"seed": seed, "trials": trials}
    return [
        CheckReport("embedding", max(0.0, emb_worst), 0.0, dict(common)),
        CheckReport("interpolation", max(0.0, interp_worst), 0.0, dict(common)),
    ]


def _brezis_lieb_checks(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    reports = []

    # escaping dyadic spike train: defect must be exactly zero once disjoint
    for variant, name in ((False, "brezis_lieb_disjoint"), (True, "brezis_lieb_gradient")):
        worst = 0.0
        for trial in range(20):
            u = dyadic_random_function(LatticeBox(2, 2), rng)
            terms = []
            for n in range(1, 4):
                box = LatticeBox(2, 6 + 2 * n)
                spike = delta(box, (5 + 2 * n, 0), height=0.5)
                terms.append(place(u, (0, 0), box) + spike)
            defect = brezis_lieb_defect(FunctionSequence(tuple(terms)), u, 2.0, variant)
            worst = max(worst, defect)
        reports.append(CheckReport(name, worst, 0.0, {"seed": seed, "trials": 20}))

    # explicit small perturbation at one site: defect has a closed form
    worst = 0.0
    for trial in range(20):
        box = LatticeBox(2, 4)
        u = random_function(box, rng)
        site = (1, 1)
        n = trial + 2
        bump = delta(box, site, height=1.0 / n)
        seq = FunctionSequence((u + bump,))
        measured = brezis_lieb_defect(seq, u, 2.0)
        predicted = abs(2.0 * u.value_at(site) / n)
        worst = max(worst, abs(measured - predicted))
    reports.append(
        CheckReport("brezis_lieb_perturbation", worst, 1e-10, {"seed": seed, "trials": 20})
    )
    return reports


def _norm_equivalence_check(seed: int, trials: int) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(trials):
        box = LatticeBox(_DIMS[i % 2], 4)
        p, q = _PQ_GRID[i % 3]
        u = random_function(box, rng)
        fields = []
        for _ in range(2):
            limit = float(rng.uniform(0.5, 2.0))
            profile = {}
            for _ in range(rng.integers(1, 6)):
                site = tuple(int(c) for c in rng.integers(-3, 4, box.dim))
                profile[site] = float(rng.uniform(-limit / 2, limit / 2))
            fields.append(CoefficientField.radial_limit(limit, profile))
        ratio, (c1, c2) = norm_equivalence_ratio(u, p, q, fields[0], fields[1])
        worst = max(worst, c1 - ratio, ratio - c2)
    return CheckReport("norm_equivalence", max(0.0, worst), 0.0, {"seed": seed, "trials": trials})


def _lions_check(seed: int) -> CheckReport:
    rng = np.random.default_rng(seed)
    box = LatticeBox(2, 4)
    u = random_function(box, rng)
    terms = tuple(u * (1.0 / n) for n in range(1, 9))
    report = lions_decay_check(FunctionSequence(terms), 2.0, 4.0)
    report.witnesses["seed"] = seed
    return report


def _fd_checks(seed: int, trials_per_case: int) -> CheckReport:
    """Pooled finite-difference check over the (N, p, q) grid on B_4.

    The ratio statistic is pooled across all cases before taking the median;
    a per-case median over a handful of trials is too noisy near the floating
    point floor of the h = 1e-5 error.
    """
    rng = np.random.default_rng(seed)
    total = 0
    max_rel = 0.0
    ratios = []
    for dim in _DIMS:
        for p, q in _PQ_GRID:
            box = LatticeBox(dim, 4)
            a = CoefficientField.radial_limit(1.0, {(1,) + (0,) * (dim - 1): 0.5})
            b = CoefficientField.constant(1.0)
            params = ProblemParams(dim=dim, p=p, q=q, a=a, b=b)
            u = random_function(box, rng)
            for _ in range(trials_per_case):
                rel, ratio = _fd_trial(u, params, random_function(box, rng))
                max_rel = max(max_rel, rel)
                if ratio is not None:
                    ratios.append(ratio)
                total += 1
    return _fd_report(max_rel, ratios, {"seed": seed, "trials": total})


def _gap_check(seed: int, trials: int) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(trials):
        dim = _DIMS[i % 2]
        p, q = _PQ_GRID[i % 3]
        box = LatticeBox(dim, 4)
        origin_zone = [
            tuple(int(c) for c in site)
            for site in LatticeBox(dim, 2).sites
        ]
        a = CoefficientField.radial_limit(
            1.0, {s: float(rng.uniform(0.0, 0.5)) for s in origin_zone[:5]}
        )
        b = CoefficientField.radial_limit(
            2.0, {s: float(rng.uniform(-0.5, 0.5)) for s in origin_zone[3:8]}
        )
        params = ProblemParams(dim=dim, p=p, q=q, a=a, b=b)
        u = random_function(box, rng)
        gap, bound = phi_phibar_gap(u, params)
        worst = max(worst, gap - bound)
    return CheckReport("phi_phibar_gap", max(0.0, worst), 0.0, {"seed": seed, "trials": trials})


def run_verification_suite(
    seed: int = 0,
    random_trials: int = 1000,
    fd_trials_per_case: int = 20,
    field_trials: int = 60,
) -> list[CheckReport]:
    """Run every check with seeds derived from ``seed``; returns one report each."""
    reports = []
    reports.extend(_embedding_checks(seed, random_trials))
    reports.extend(_brezis_lieb_checks(seed + 1))
    reports.append(_norm_equivalence_check(seed + 2, field_trials))
    reports.append(_lions_check(seed + 3))
    reports.append(_fd_checks(seed + 4, fd_trials_per_case))
    reports.append(_gap_check(seed + 5, field_trials))
    return reports
