"""Acceptance criteria, one test each; results are echoed in the terminal summary."""
import json
import time
from functools import lru_cache

import numpy as np
import pytest

from rips_homotopy.cli import main
from rips_homotopy.harness import (Tally, check_composition, check_config_monotone, check_extremes,
                                   check_glue, check_pi1_vs_h1, check_pushout, check_subdivision,
                                   degree_pair, gap_indices, gap_pair, pair_space_instance, rips_pair)
from rips_homotopy.metric import SubsetPair
from rips_homotopy.stability import blumberg_lesnick, phase_gap_report, verify_interleaving


def rng_for(criterion: int, i: int) -> np.random.Generator:
    return np.random.default_rng([criterion, i])


@lru_cache(maxsize=None)
def degree_instances():
    out = []
    for i in range(300):
        rng = rng_for(2, i)
        k = int(rng.integers(1, 3))
        pair, r = degree_pair(rng, k)
        out.append((pair, k, r))
    return tuple(out)


def test_rips_certificates(record):
    start = time.perf_counter()
    failures = 0
    for i in range(1000):
        pair, r = rips_pair(rng_for(1, i))
        failures += not verify_interleaving(pair, r, 0, 2).overall
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 60
    record(1, ok, f"Rips retraction certificates: 1000 instances, {failures} failures, {elapsed:.1f}s (< 60s)")
    assert ok


def test_degree_certificates(record):
    start = time.perf_counter()
    failures = cascade_failures = 0
    for pair, k, r in degree_instances():
        if not verify_interleaving(pair, r, k, 2).overall:
            failures += 1
            continue
        cascade_failures += not all(verify_interleaving(pair, r, j, 2).overall for j in range(k))
    elapsed = time.perf_counter() - start
    ok = failures == 0 and cascade_failures == 0 and elapsed < 120
    record(2, ok, f"degree-Rips certificates: 300 instances, {failures} failures, "
                  f"{cascade_failures} lower-degree failures, {elapsed:.1f}s (< 120s)")
    assert ok


def test_configuration_monotone_in_k(record):
    tally = Tally("config")
    for pair, k, r in degree_instances():
        check_config_monotone(pair, k, r, tally)
    ok = tally.passed and tally.vacuous == 0
    record(3, ok, f"configuration predicate k ⟹ k-1: {tally.checked} instances, "
                  f"{len(tally.failures)} failures, {tally.vacuous} without premise")
    assert ok


def test_pair_space_homology(record):
    start = time.perf_counter()
    failures = 0
    for i in range(100):
        X, Y, cross, r, s = pair_space_instance(rng_for(4, i))
        verdict = blumberg_lesnick(X, Y, cross, r, s, dim_cap=2, p=2)
        failures += not (verdict.passed and set(verdict.degrees) == {0, 1})
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 120
    record(4, ok, f"pair-space maps in homology over GF(2): 100 instances, {failures} failures, "
                  f"{elapsed:.1f}s (< 120s)")
    assert ok


def test_phase_gap_equivalences(record):
    failures = checked = interior = 0
    for i in range(100):
        pair, r = gap_pair(rng_for(5, i))
        indices = gap_indices(pair, r)
        n_grid = len(indices) and indices[-1] + 1
        for idx in indices:
            report = phase_gap_report(pair, 0, r, idx, dim_cap=2, primes=(2, 3))
            checked += 1
            interior += idx < n_grid - 1
            failures += not report.passed
    ok = failures == 0 and interior > 0
    record(5, ok, f"phase-gap inclusions: 100 instances, {checked} gap indices "
                  f"({interior} interior), {failures} failures")
    assert ok


def test_pi1_abelianization_matches_h1(record):
    tally = Tally("pi1")
    for i in range(200):
        check_pi1_vs_h1(rng_for(6, i), tally)
    record(6, tally.passed, f"π_1 abelianization = integral H_1: {tally.checked} slices, "
                            f"{len(tally.failures)} mismatches")
    assert tally.passed


def test_subdivision_invariance(record):
    tally = Tally("sd")
    for i in range(100):
        check_subdivision(rng_for(7, i), tally)
    record(7, tally.passed, f"order complex preserves H_0, H_1: {tally.checked} slices, "
                            f"{len(tally.failures)} mismatches")
    assert tally.passed


def test_system_calculus(record):
    tallies = {name: Tally(name) for name in ("fg", "hg", "fh", "monotone")}
    for i in range(1000):
        check_composition(rng_for(8, i), tallies)
    pushout = Tally("pushout")
    for i in range(1000):
        check_pushout(rng_for(80, i), pushout)
    glue = Tally("glue")
    for i in range(100):
        check_glue(rng_for(81, i), glue, primes=(2, 3))
    everything = [*tallies.values(), pushout, glue]
    failures = sum(len(t.failures) for t in everything)
    # each family must exercise its premise on a healthy share of instances
    live = all(t.checked - t.vacuous >= 0.25 * t.checked for t in everything)
    ok = failures == 0 and live
    detail = ", ".join(f"{t.name} {t.checked - t.vacuous}/{t.checked}" for t in everything)
    record(8, ok, f"systems calculus: {failures} failures; non-vacuous checks {detail}")
    assert ok


def test_extremes(record):
    tally = Tally("extremes")
    for i in range(1000):
        check_extremes(rips_pair(rng_for(1, i))[0], tally)
    for pair, _, _ in degree_instances():
        check_extremes(pair, tally)
    for i in range(100):
        check_extremes(gap_pair(rng_for(5, i))[0], tally)
        X, Y, *_ = pair_space_instance(rng_for(4, i))
        for pts in (X, Y):
            check_extremes(SubsetPair(pts, tuple(range(pts.n))), tally)
    record(9, tally.passed, f"discrete at s=0, contractible at the diameter: {tally.checked} "
                            f"instances, {len(tally.failures)} failures")
    assert tally.passed


def _run_all(base, inputs):
    line, square = str(inputs["line"]), str(inputs["square"])
    runs = [
        ["invariants", "--input", square, "--primes", "2,3", "--deg-cap", "2", "--plot",
         "--out", str(base / "inv.json")],
        ["stability", "--input", line, "--subset-indices", "0,2", "--r", "1.1", "--out", str(base / "st.json")],
        ["stability", "--input", square, "--subset-indices", "0,2", "--r", "1.1", "--k", "1",
         "--out", str(base / "st1.json")],
        ["systems", "--input", line, "--subset-indices", "0,2", "--primes", "2,3", "--r", "1",
         "--out", str(base / "sys.json")],
        ["property", "--seed", "12345", "--count", "3", "--out", str(base / "prop.json")],
        ["export-complex", "--input", square, "--deg-cap", "3", "--out", str(base / "cx.json")],
    ]
    codes = [main(argv) for argv in runs]
    return codes, {p.name: p.read_bytes() for p in sorted(base.iterdir())}


def test_cli_determinism(record, tmp_path):
    inputs = {"line": tmp_path / "line.json", "square": tmp_path / "square.csv"}
    inputs["line"].write_text(json.dumps({"points": [[0], [1], [3]]}))
    inputs["square"].write_text("0,0\n1,0\n1,1\n0,1\n")
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    codes_a, files_a = _run_all(tmp_path / "a", inputs)
    codes_b, files_b = _run_all(tmp_path / "b", inputs)
    ok = codes_a == codes_b == [0] * 6 and files_a == files_b and len(files_a) == 8
    record(10, ok, f"CLI reruns byte-identical: {len(files_a)} output files from 6 commands, "
                   f"exit codes {codes_a}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
