"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed with
output capture disabled so they show up in the plain pytest log.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from mpp.benchmark import check_equality_condition, solve_benchmark
from mpp.cli import main
from mpp.core import check_persuasive, lag, lag_distance, sender_preferred_invariant
from mpp.core.instance import slice_cap
from mpp.errors import InternalError
from mpp.generators import corpus, iid_instance, random_persuasive_mechanism
from mpp.partial import solve_partial
from mpp.robust import (
    build_robust_mechanism,
    merge_beliefs,
    perturbation_lp,
    persuasive_lag,
    regularity_params,
    split_mechanism,
    verify_robust,
)
from mpp.sim import simulate

REPO = Path(__file__).resolve().parents[1]
EXAMPLE = "examples/example1.json"
FIGURE_TARGETS = (0.576, 0.772, 0.799, 0.808, 0.811)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return emit


def _run_cli(capsys, argv):
    start = time.perf_counter()
    code = main(argv)
    elapsed = time.perf_counter() - start
    return code, capsys.readouterr().out, elapsed


def test_criterion_1_example_benchmarks(capsys, report, monkeypatch):
    monkeypatch.chdir(REPO)
    results = []
    for model, target in (("no", 1.0), ("full", 0.52)):
        code, out, elapsed = _run_cli(capsys, ["solve", EXAMPLE, "--model", model])
        value = float(out.split("\n")[0].split("=")[1])
        results.append((model, code, value, target, elapsed))
    ok = all(code == 0 and abs(v - t) <= 1e-6 and e < 1.0 for _, code, v, t, e in results)
    detail = "; ".join(f"{m}: {v:.6f} in {e:.2f}s" for m, _, v, _, e in results)
    assert report(1, ok, detail)


@pytest.mark.slow
def test_criterion_2_memory_sweep(capsys, report, monkeypatch):
    monkeypatch.chdir(REPO)
    code, out, elapsed = _run_cli(
        capsys, ["partial", EXAMPLE, "--lag", "1", "--memory", "0..4", "--starts", "50", "--seed", "0"]
    )
    rows = [line.split(",") for line in out.strip().split("\n")[1:]]
    values = [float(r[2]) for r in rows]
    inside = [t - 0.01 <= v <= t + 0.005 for v, t in zip(values, FIGURE_TARGETS)]
    ok = code == 0 and len(values) == 5 and all(inside) and elapsed < 300
    detail = ", ".join(f"k={k}: {v:.5f} (target {t})" for k, (v, t) in enumerate(zip(values, FIGURE_TARGETS)))
    assert report(2, ok, f"{detail}; {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_3_ordering(report):
    start = time.perf_counter()
    violations = []
    for i, inst in enumerate(corpus(200, seed=0)):
        full = solve_benchmark(inst, "full").value
        no = solve_benchmark(inst, "no").value
        sol = solve_partial(inst, 1, 1, n_starts=2, seed=i, max_iterations=40, screen_iterations=4, finalists=1)
        if not (full <= sol.value + 1e-7 and sol.value <= no + 1e-7):
            violations.append((i, full, sol.value, no))
    elapsed = time.perf_counter() - start
    ok = not violations and elapsed < 600
    assert report(3, ok, f"{len(violations)} ordering violations on 200 instances; {elapsed:.0f}s")


def test_criterion_4_split_merge_round_trip(report):
    worst = 0.0
    for i, inst in enumerate(corpus(100, seed=4)):
        sigma = random_persuasive_mechanism(inst, i)
        split = split_mechanism(inst, sigma)
        scheme = merge_beliefs(inst, [(split.weights[a], split.beliefs[a], a) for a in split.support])
        merged = scheme.to_mechanism(inst.n_actions)
        reached = sender_preferred_invariant(inst, sigma).states() > 1e-12
        worst = max(worst, float(np.abs(merged.table[0][reached] - sigma.table[0][reached]).max()))
    assert report(4, worst <= 1e-9, f"max |merge(split(sigma)) - sigma| = {worst:.2e} over 100 mechanisms")


def test_criterion_5_robust_pipeline(ex1, report):
    start = time.perf_counter()
    cert = build_robust_mechanism(ex1, 0.01)
    verdict = verify_robust(ex1, cert, n_samples=10_000, seed=0)
    elapsed = time.perf_counter() - start
    ok = (
        cert.payoff >= cert.payoff_lower_bound
        and verdict.analytic_ok
        and verdict.sampled_ok
        and verdict.violations == 0
        and elapsed < 30
    )
    detail = (
        f"payoff {cert.payoff:.6f} >= bound {cert.payoff_lower_bound:.6f}, analytic_ok={verdict.analytic_ok}, "
        f"{verdict.violations} violations in {verdict.n_samples} samples; {elapsed:.1f}s"
    )
    assert report(5, ok, detail)


@pytest.mark.parametrize("cap", [None, 8])
def test_criterion_6_mixing_consistency(ex1, report, monkeypatch, cap):
    if cap is not None:
        monkeypatch.setenv("MPP_SLICE_CAP", str(cap))
    cert = build_robust_mechanism(ex1, 0.01)
    lags = persuasive_lag(ex1, cert)
    d = lag_distance(ex1, cert.mechanism, lags.spectral)
    ok = d <= cert.epsilon
    detail = f"cap {slice_cap()}: d(spectral lag {lags.spectral}) = {d:.2e} <= {cert.epsilon}"
    if lags.exact + 1 <= slice_cap():
        persuasive = check_persuasive(ex1, cert.mechanism, lag(lags.exact)).ok
        ok = ok and persuasive
        detail += f"; obedient under lag {lags.exact}: {persuasive}"
    else:
        detail += f"; exact lag {lags.exact} needs slice length {lags.exact + 1} > cap, lagged check not applicable"
    assert report(6, ok, detail)


def test_criterion_7_perturbation_bound(report):
    failures = []
    worst_ratio = 0.0
    for i, inst in enumerate(corpus(100, seed=7)):
        split = split_mechanism(inst, solve_benchmark(inst, "no").mechanism)
        eta = regularity_params(inst, split.support, strict=False).eta
        try:
            pert = perturbation_lp(inst, split, eta)
        except InternalError as exc:
            failures.append((i, str(exc)))
            continue
        # recompute the bound from scratch rather than trusting the returned constants
        S = inst.n_states
        vals, vecs = np.linalg.eig(pert.p_f.T)
        nu = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
        nu = nu / nu.sum()
        tau = float((1 / nu).max())
        sv = np.linalg.svd(np.eye(S) - pert.p_f, compute_uv=False)
        s_f = sv[sv > 1e-10].min()
        bound = 2 * (1 + tau) * math.sqrt(S) / s_f
        residual = np.abs(pert.y @ (np.eye(S) - pert.p_f) - pert.rhs).max()
        if pert.y.min() < -1e-12 or residual > 1e-9 or pert.y_norm > bound + 1e-6:
            failures.append((i, pert.y_norm, bound, residual))
        worst_ratio = max(worst_ratio, pert.y_norm / bound)
    detail = f"{len(failures)} failures on 100 instances; max ||y||/bound = {worst_ratio:.3f}"
    assert report(7, not failures, detail)


def test_criterion_8_simulation(ex1, report):
    sol = solve_benchmark(ex1, "no")
    pi = sender_preferred_invariant(ex1, sol.mechanism).pairs()
    T = 100_000
    limit = 5 * math.sqrt(ex1.n_pairs / T)
    gaps = [float(np.abs(simulate(ex1, sol.mechanism, T, seed=s).frequencies - pi).sum()) for s in range(20)]
    assert report(8, max(gaps) <= limit, f"max l1 gap {max(gaps):.4f} <= {limit:.4f} over 20 seeds")


def test_criterion_9_equality_condition(report):
    instances = corpus(60, seed=9) + [iid_instance(s, n_states=2 + s % 3, n_actions=2 + s % 2) for s in range(40)]
    held, bad = 0, []
    for i, inst in enumerate(instances):
        result = check_equality_condition(inst)
        if not result.holds:
            continue
        held += 1
        full = solve_benchmark(inst, "full").value
        no = solve_benchmark(inst, "no").value
        obedient = check_persuasive(inst, result.witness, "full").ok
        if abs(no - full) > 1e-7 or not obedient:
            bad.append((i, no, full, obedient))
    ok = held > 0 and not bad
    assert report(9, ok, f"condition held on {held} of {len(instances)} instances, {len(bad)} unsound")
