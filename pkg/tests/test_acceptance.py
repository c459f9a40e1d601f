"""Acceptance criteria, each run at its stated tolerance (exact equality,
zero discrepancies). Every test prints one PASS/FAIL line; the lines are
repeated under "acceptance criteria" in the pytest summary.

Run alone with ``pytest tests/test_acceptance.py -s``.
"""

from __future__ import annotations

import random
from collections import Counter
from itertools import product

import pytest

from cylpos import colops, oracle, synth
from cylpos.colops import apply, apply_certificate, to_network
from cylpos.cylnet import EXAMPLE_CUT, boundary_measurements, example_network, perfectize, slice_network
from cylpos.exactmat import Matrix, cvar_matrix, maximal_minors, odd_minors_nonneg
from cylpos.oracle import EnumSpec, TrialReport

pytestmark = pytest.mark.acceptance

SEED = 20240611
N5_SAMPLE = 20000
RANDOM_3XN = 10**4
CERTS = 1000
PAIRS = 10**4
NETWORKS = 500


def _summary(report: TrialReport, limit: int = 3) -> str:
    totals = ", ".join(f"{k}={v}" for k, v in sorted(report.totals.items()))
    shown = "; ".join(d.line() for d in report.discrepancies[:limit])
    return f"discrepancies={len(report.discrepancies)} [{totals}]" + (f" e.g. {shown}" if shown else "")


def _show(M: Matrix) -> str:
    return "[" + ",".join("[" + ",".join(map(str, r)) + "]" for r in M.rows) + "]"


def test_criterion_1_golden_example(record_criterion):
    N = example_network()
    B = boundary_measurements(N)
    cut = boundary_measurements(slice_network(N, EXAMPLE_CUT).network)
    ok = B.tolist() == [[1, 2, 1], [1, 2, 1], [0, 1, 1]] and cut.tolist() == [[1, 1], [1, 1], [0, 1]]
    record_criterion(1, ok, f"B={_show(B)} M_t={_show(cut)}")
    assert ok


def _rank2_report() -> TrialReport:
    spec = EnumSpec(2, 4, (0, 1, 2, 3))
    report = oracle.cross_check_characterization(spec, networks=False)
    # every 2x5 matrix over {0,1}, then a seeded sample over {0,...,3}
    extra = TrialReport(report.label)
    for k, flat in enumerate(product((0, 1), repeat=10)):
        oracle.check_one(Matrix([flat[:5], flat[5:]]), -1 - k, extra, networks=False)
    rng = random.Random(f"{SEED}:n5")
    for k in range(N5_SAMPLE):
        M = Matrix([[rng.randint(0, 3) for _ in range(5)] for _ in range(2)])
        oracle.check_one(M, -10**6 - k, extra, networks=False)
    report.totals += extra.totals
    report.notes += extra.notes
    report.discrepancies += extra.discrepancies
    return report


def test_criterion_2_rank2_exhaustive(record_criterion):
    report = _rank2_report()
    zero_col = sum(1 for d in report.discrepancies if any(not any(c) for c in d.matrix.columns()))
    detail = _summary(report) + f" (with a zero column: {zero_col}; cvar-zero yet constructible: {report.notes['cvar-zero but constructible']})"
    record_criterion(2, report.ok, detail)
    assert report.ok, detail


@pytest.fixture(scope="module")
def rank3_run():
    spec = EnumSpec(3, 4, (0, 1))
    report = oracle.cross_check_characterization(spec, networks=False)
    rng = random.Random(f"{SEED}:r3")
    logs = []

    def decide_and_keep(M):
        v = synth.decide(M)
        if v.accepted:
            logs.append(v.log)
        return v

    extra = TrialReport(report.label)
    for k in range(RANDOM_3XN):
        n = rng.randint(3, 6)
        M = Matrix([[rng.randint(0, 3) for _ in range(n)] for _ in range(3)])
        oracle.check_one(M, -1 - k, extra, decide=decide_and_keep, networks=False)
    for _, M in oracle.enumerate_indexed(spec):
        decide_and_keep(M)
    report.totals += extra.totals
    report.discrepancies += extra.discrepancies
    return report, logs


def test_criterion_3_rank3(rank3_run, record_criterion):
    report, _ = rank3_run
    record_criterion(3, report.ok, _summary(report))
    assert report.ok


def test_criterion_4_certificate_network_soundness(record_criterion):
    bad = []
    for k in range(CERTS):
        m = 2 + k % 2
        rng = random.Random(f"{SEED}:len:{k}")
        c = oracle.random_certificate(m, rng.randint(0, 30), f"{SEED}:{k}")
        if boundary_measurements(to_network(c)) != apply_certificate(c):
            bad.append(k)
    record_criterion(4, not bad, f"{CERTS} certificates, mismatches={len(bad)} {bad[:5]}")
    assert not bad


def _random_pair(rng, m, predicate=None):
    while True:
        n = rng.randint(m, 6)
        M = Matrix([[rng.randint(0, 3) for _ in range(n)] for _ in range(m)])
        if predicate is None or predicate(M):
            return M, oracle.random_op(rng, n, zero_rescale=True)


def test_criterion_5_monotonicity_and_preservation(record_criterion):
    rng = random.Random(f"{SEED}:pairs")
    cvar_bad = Counter()
    example = None
    for _ in range(PAIRS):
        M, op = _random_pair(rng, rng.choice((2, 3)))
        after = apply(op, M)
        if cvar_matrix(after) > cvar_matrix(M):
            zero = any(not any(c) for c in M.columns())
            cvar_bad[(M.m, "zero column" if zero else "no zero column")] += 1
            example = example or (M.tolist(), str(op), cvar_matrix(M), cvar_matrix(after))
    pres_bad = 0
    for _ in range(PAIRS):
        M, op = _random_pair(rng, 3, lambda M: odd_minors_nonneg(M)[0])
        if not odd_minors_nonneg(apply(op, M))[0]:
            pres_bad += 1
    ok = not cvar_bad and not pres_bad
    breakdown = ", ".join(f"m={m} {kind}: {v}" for (m, kind), v in sorted(cvar_bad.items()))
    detail = f"cvar increases={sum(cvar_bad.values())}/{PAIRS} ({breakdown or 'none'}); odd-minor violations={pres_bad}/{PAIRS}"
    if example:
        M, op, a, b = example
        detail += f"; e.g. {op} on {_show(Matrix(M))} takes cvar {a} -> {b}"
    record_criterion(5, ok, detail)
    assert ok, detail


def test_criterion_6_dichotomy_and_termination(rank3_run, record_criterion):
    _, logs = rank3_run
    subtracts = dichotomy_bad = potential_bad = 0
    for log in logs:
        mats = log.snapshots + [log.reduced]
        pots = [(M.n, -sum(1 for x in M.entries() if x == 0)) for M in mats]
        for k, step in enumerate(log.steps):
            if isinstance(step, synth.SubtractNeighbor):
                subtracts += 1
                after = log.after(k)
                zero_minor = any(v == 0 for _, v in maximal_minors(after))
                still = synth.comparable(after, step.i, step.j) in (synth.Order.I_BEFORE_J, synth.Order.BOTH)
                if not zero_minor and still:
                    dichotomy_bad += 1
                if not pots[k + 1] < pots[k]:
                    # a zeroed minor: the removal that must follow pays for both steps
                    paid = zero_minor and k + 1 < len(log.steps) and isinstance(log.steps[k + 1], synth.RemoveColumn) and pots[k + 2] < pots[k]
                    potential_bad += not paid
            elif not pots[k + 1] < pots[k]:
                potential_bad += 1
    ok = subtracts > 0 and not dichotomy_bad and not potential_bad
    record_criterion(
        6, ok, f"{len(logs)} accepted runs, {subtracts} subtractions; dichotomy violations={dichotomy_bad}, potential violations={potential_bad}"
    )
    assert ok


def test_criterion_7_oracle_independence(record_criterion):
    checked = skipped = dp_bad = 0
    networks = [to_network(oracle.random_certificate(2 + k % 2, k % 31, f"{SEED}:net:{k}")) for k in range(CERTS)]
    networks += [oracle.random_network(f"{SEED}:{k}", 1 + k % 3, 1 + k % 4, k % 7, k % 5) for k in range(NETWORKS)]
    for N in networks:
        try:
            brute = oracle.brute_force_paths(N)
        except oracle.PathBoundExceeded:
            skipped += 1
            continue
        checked += 1
        dp_bad += brute != boundary_measurements(N)
    perf_bad = 0
    for k in range(NETWORKS):
        N = oracle.random_network(f"{SEED}:p:{k}", 1 + k % 3, 1 + k % 4, k % 8, k % 6)
        perf_bad += boundary_measurements(perfectize(N)) != boundary_measurements(N)
    ok = not dp_bad and not perf_bad
    record_criterion(
        7, ok, f"DP vs path walk: {checked} networks, mismatches={dp_bad}, skipped over bound={skipped}; perfectize: {NETWORKS} networks, mismatches={perf_bad}"
    )
    assert ok
