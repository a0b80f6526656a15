"""Acceptance gate: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also written to the terminal when output is captured.
"""

import itertools
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from malign.aligner import Instance, align_exact, brute_force_score
from malign.blocks import decompose_cells
from malign.cli import main
from malign.experiments import PermConfig, bm_recursion, composition, lis_oracle, perm_pair, perm_score_L, perm_study, perm_window_model
from malign.mc import McConfig, clt_row, diagonal_audit, estimate_gamma_curve, estimate_gamma_surface, default_q_grid, hoeffding_audit
from malign.rng import stream
from malign.scoring import Alphabet, SequenceDistribution, build_score_model, lcs_indicator
from malign.stein import PairedSample, kappa_normalization, stein_exact, stein_sampled

PILOTS = Path(__file__).resolve().parents[1] / "scripts" / "pilots"

X1 = [1, 1, 2, 1, 2, 1, 1, 2, 1, 1, 3, 1]
X2 = [2, 1, 1, 3, 2, 3, 1, 2, 1, 1, 1, 1]


@pytest.fixture
def verdict(capsys):
    def _verdict(k: int, ok: bool, detail: str):
        line = f"CRITERION {k:2d} {'PASS' if ok else 'FAIL'}: {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return _verdict


@pytest.fixture(scope="module")
def binary():
    return lcs_indicator(2, 2), SequenceDistribution.uniform(2, 2)


def test_criterion_01_worked_example(verdict):
    model = lcs_indicator(4, 3)
    inst = Instance.of(X1, X2, X2)
    align_exact(Instance.of([1], [1], [1]), model, want_path=True)
    t0 = time.perf_counter()
    res = align_exact(inst, model, want_path=True)
    decomp = decompose_cells(res.path, inst.lengths, 3, inst, model)
    # the cell holding letter 8 of the first word
    cell = decomp.cell_letters(inst, decomp.cell_of(7))
    elapsed = time.perf_counter() - t0
    expected = ((1, 2, 1), (3, 1, 2, 1), (3, 1, 2, 1))
    ok = res.value == 8 and decomp.d == 4 and cell == expected and elapsed < 1.0
    verdict(1, ok, f"L_12={res.value} (expected 8), d={decomp.d}, P_8={cell} (expected {expected}), {elapsed:.3f}s")


def _random_model(rng, m, k):
    reps = list(itertools.combinations_with_replacement(range(k), m))
    nums = rng.integers(0, 5, len(reps))
    if not nums.any():
        nums[rng.integers(len(reps))] = 1
    dens = rng.choice([1, 2, 4, 8], len(reps))
    return build_score_model(Alphabet(k), m, [(r, Fraction(int(a), int(b))) for r, a, b in zip(reps, nums, dens)])


def test_criterion_02_brute_force_equivalence(verdict):
    rng = stream(2, 0)
    t0 = time.perf_counter()
    agree = 0
    for _ in range(500):
        m = int(rng.integers(2, 4))
        k = int(rng.integers(1, 4))
        model = _random_model(rng, m, k)
        seqs = [rng.integers(0, k, int(rng.integers(0, 8))) for _ in range(m)]
        inst = Instance(tuple(seqs))
        agree += align_exact(inst, model).score == brute_force_score(inst, model)
    elapsed = time.perf_counter() - t0
    verdict(2, agree == 500 and elapsed < 60, f"{agree}/500 instances agree, {elapsed:.1f}s")


def test_criterion_03_bounded_differences(verdict):
    rng = stream(3, 0)
    violations = 0
    for i in range(10_000):
        if i % 100 == 0:
            m = int(rng.integers(2, 4))
            k = int(rng.integers(2, 4))
            model = _random_model(rng, m, k)
        lengths = rng.integers(1, 13 if m == 2 else 8, m)
        seqs = [rng.integers(0, k, int(n)) for n in lengths]
        base = align_exact(Instance(tuple(seqs)), model).score
        j = int(rng.integers(m))
        pos = int(rng.integers(lengths[j]))
        mutated = [s.copy() for s in seqs]
        mutated[j][pos] = rng.integers(k)
        after = align_exact(Instance(tuple(mutated)), model).score
        violations += abs(after - base) > model.d_max
    verdict(3, violations == 0, f"{violations} violations in 10000 single-letter mutations")


def test_criterion_04_concentration(verdict, binary):
    model, dist = binary
    t0 = time.perf_counter()
    rep = hoeffding_audit(model, dist, 200, [5, 10, 20, 40], McConfig(seed=4, replicates=10_000))
    elapsed = time.perf_counter() - t0
    freqs = ", ".join(f"t={r['t']:g}: {max(r['freq_upper'], r['freq_lower']):.4f} <= {r['bound']:.3g}" for r in rep.rows)
    verdict(4, rep.violations == 0 and elapsed < 600, f"{rep.violations} flagged tails ({freqs}), {elapsed:.1f}s")


def test_criterion_05_superadditivity(verdict, binary):
    model, dist = binary
    curve = estimate_gamma_curve(model, dist, McConfig(seed=5, replicates=2000, n_grid=(50, 100, 200, 400)))
    audit = curve.superadditivity
    ok = [a["n"] for a in audit] == [50, 100, 200] and all(a["holds"] for a in audit)
    detail = "; ".join(f"E L_{2 * a['n']}={a['mean_2n']:.3f} vs 2 E L_{a['n']}={2 * a['mean_n']:.3f} (SE {a['pooled_se']:.3f})" for a in audit)
    verdict(5, ok, detail)


def test_criterion_06_gamma_surface(verdict, binary):
    model, dist = binary
    rep = estimate_gamma_surface(model, dist, 100, default_q_grid(), McConfig(seed=6, replicates=2000))
    best = max(rep.estimates, key=lambda e: e.gamma)
    ok = rep.center == (1.0, 1.0) and rep.max_at_center and rep.concave and len(rep.concavity) > 0
    verdict(
        6,
        ok,
        f"grid max at q={best.q}, center ok={rep.max_at_center}, "
        f"{sum(c['holds'] for c in rep.concavity)}/{len(rep.concavity)} midpoint checks pass",
    )


def test_criterion_07_diagonal_closeness(verdict, binary):
    model, dist = binary
    pilot = json.loads((PILOTS / "diagonal_c1.json").read_text())
    a = diagonal_audit(model, dist, 1024, 4 / 7, pilot["c1"], pilot["p_lo"], pilot["p_hi"], 200, seed=7)
    ok = a.e_rate >= 0.95 and a.d_given_e == a.e_holds
    verdict(
        7,
        ok,
        f"c1={pilot['c1']} (pilot seed {pilot['pilot_seed']}), eps={a.epsilon:.4f}, v={a.v}: "
        f"E on {a.e_holds}/200, D on {a.d_given_e}/{a.e_holds} E-seeds",
    )


def test_criterion_08_normal_approximation(verdict, binary):
    model, dist = binary
    pilot = json.loads((PILOTS / "clt_dk.json").read_text())
    cfg = McConfig(seed=8, replicates=10_000)
    t0 = time.perf_counter()
    small = clt_row(model, dist, 100, cfg)
    large = clt_row(model, dist, 1600, cfg)
    elapsed = time.perf_counter() - t0
    apart = large.dk_hat < small.dk_hat - small.dk_band - large.dk_band
    ok = apart and large.dk_hat < pilot["threshold"] and elapsed < 1800
    verdict(
        8,
        ok,
        f"dk(100)={small.dk_hat:.4f}, dk(1600)={large.dk_hat:.4f}, bands {small.dk_band:.4f}; "
        f"threshold {pilot['threshold']} (pilot seed {pilot['pilot_seed']}), {elapsed:.0f}s",
    )


def test_criterion_09_recombination_statistics(verdict, binary):
    model, dist = binary
    paired = PairedSample.draw(dist, 6, stream(9, 0))
    exact = stein_exact(model, paired)
    est = stein_sampled(model, paired, 1_000_000, stream(9, 1))
    rel = abs(est.T - exact.T) / abs(exact.T)
    kappa_err = max(abs(kappa_normalization(N) - N) for N in range(1, 15))
    ok = abs(est.T - exact.T) <= 3 * est.se and rel < 0.05 and kappa_err <= 1e-12
    verdict(
        9,
        ok,
        f"T exact={exact.T:.5f}, sampled={est.T:.5f} (SE {est.se:.5f}, rel err {rel:.3%}); "
        f"max kappa identity error {kappa_err:.1e}",
    )


def test_criterion_10_experiments(verdict):
    rng = stream(10, 0)
    model = lcs_indicator(3, 2)
    bm_ok = 0
    for _ in range(100):
        n = int(rng.integers(1, 40))
        x = rng.integers(0, 3, n)
        y = rng.integers(0, 3, n)
        field = (x[:, None] == y[None, :]).astype(np.int64)
        bm_ok += bm_recursion(field) == align_exact(Instance.of(x, y), model).value
    cfg = PermConfig(1024, 0.0, seed=10)
    wmodel = perm_window_model(1024, 0.0)
    lis_ok = 0
    for i in range(200):
        pi, rho = perm_pair(cfg, i)
        lis_ok += perm_score_L(cfg, wmodel, i) == lis_oracle(composition(pi, rho))
    study = perm_study(cfg, 200)
    ok = bm_ok == 100 and lis_ok == 200 and 1.6 <= study.mean_over_sqrt_n <= 2.4
    verdict(10, ok, f"BM {bm_ok}/100, LIS {lis_ok}/200, mean(L)/sqrt(n)={study.mean_over_sqrt_n:.3f}")


def test_criterion_11_reproducibility(verdict, tmp_path, capsys):
    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps({"sequences": [X1, X2, X2]}))
    commands = [
        ["score", "--instance", str(inst), "--path"],
        ["diag", "--instance", str(inst), "--v", "3", "--p1", "0.5", "--p2", "2", "--eps", "0.25"],
        ["gamma", "--n", "25", "50", "--reps", "200", "--seed", "11", "--csv", "--svg"],
        ["surface", "--n", "30", "--reps", "100", "--seed", "11"],
        ["hoeffding", "--n", "50", "--t", "2", "5", "--reps", "300", "--seed", "11"],
        ["clt", "--n", "20", "40", "--reps", "300", "--seed", "11", "--csv", "--svg"],
        ["stein", "--n", "5", "--samples", "5000", "--seed", "11"],
        ["stein", "--n", "4", "--samples", "100", "--bound", "--outer", "30", "--reps", "200", "--seed", "11"],
        ["bm", "--n", "50", "--reps", "50", "--seed", "11"],
        ["perm", "--n", "64", "--reps", "50", "--seed", "11"],
    ]
    identical = 0
    for i, argv in enumerate(commands):
        out = tmp_path / f"r{i}.json"
        assert main(argv + ["--out", str(out), "--workers", "1"]) == 0
        same = True
        for workers in ("1", "4"):
            code = main(["report", "--manifest", str(tmp_path / f"r{i}.manifest.json"), "--check", "--workers", workers])
            same &= code == 0
        identical += same
    capsys.readouterr()
    verdict(11, identical == len(commands), f"{identical}/{len(commands)} reports regenerate byte-identically (1 and 4 workers)")
