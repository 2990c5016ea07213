"""The twelve acceptance criteria, each at its stated tolerance.

Each test records one PASS/FAIL line; the lines are printed together in the
terminal summary.
"""

import math
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import GOLDEN_COMPLEX, GOLDEN_REAL
from eulerspec.coefficients import ProblemInstance, slice_coefficients
from eulerspec.evolution import spectral_mapping_check
from eulerspec.lattice import LatticeVector as V, SliceDescriptor, enumerate_representatives, in_disk_window, kappa
from eulerspec.operators import build_Bq, build_L2D, build_Lq, build_M0, build_Mq, build_signature
from eulerspec.spectra import (coverage_diagnostics, decomposition_crosscheck, eig_dense, essential_interval,
                               match_multisets, nonimaginary_spectrum, resolvent_report, slice_spectrum)

BATTERY_P = [(1, 1), (0, 2), (2, 0), (2, 1), (1, 2), (2, 2)]
BATTERY_GAMMA = [1, 1j, 1 + 1j, 2]


def record(num, title, ok, detail):
    line = f"C{num} {'PASS' if ok else 'FAIL'} {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def sd(qhat, p):
    return SliceDescriptor(V(*qhat), V(*p), in_disk_window(qhat, p))


def brute_kappa(p):
    pp = p[0] ** 2 + p[1] ** 2
    r = math.isqrt(pp) + 1
    return sum(1 for x in range(-r, r + 1) for y in range(-r, r + 1)
               if x * x + y * y < pp and x * p[1] - y * p[0] != 0)


@pytest.fixture(scope="module")
def random_cases():
    rng = np.random.default_rng(20240917)
    cases = []
    while len(cases) < 50:
        p = tuple(int(v) for v in rng.integers(-4, 5, size=2))
        if p == (0, 0):
            continue
        reps = [s for s in enumerate_representatives(p, 6) if not s.collinear]
        s = reps[rng.integers(len(reps))]
        gamma = complex(*rng.normal(size=2))
        N = int(rng.integers(8, 257))
        cases.append((p, s, gamma, N))
    return cases


def test_c1_kappa_oracle():
    ps = [(x, y) for x in range(-10, 11) for y in range(-10, 11) if 0 < x * x + y * y <= 100]
    t0 = time.perf_counter()
    got = {p: kappa(p) for p in ps}
    elapsed = time.perf_counter() - t0
    mismatches = [p for p in ps if got[p] != brute_kappa(p)]
    odd = [p for p in ps if got[p] % 2]
    named = (got[(0, 1)], got[(1, 1)], got[(0, 2)], got[(2, 1)]) == (0, 4, 6, 12)
    ok = not mismatches and not odd and named and elapsed < 1.0
    record(1, "kappa oracle", ok, f"{len(ps)} vectors, mismatches={len(mismatches)}, odd={len(odd)}, "
                                  f"named={named}, {elapsed:.3f}s")


def test_c2_exact_algebra(random_cases):
    t0 = time.perf_counter()
    worst = 0.0
    for p, s, gamma, N in random_cases:
        c = slice_coefficients(ProblemInstance(p, gamma), s, (-N, N))
        D = np.diag(c.delta_seq)
        M0 = build_M0(c.alpha, (-N, N)).to_dense()
        B = build_Bq(c).to_dense()
        M = build_Mq(c).to_dense()
        L = build_Lq(c).to_dense()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            J = build_signature(s, (-N, N)).to_dense()
        scale = np.max(np.abs(B))
        worst = max(worst,
                    np.max(np.abs(J @ B @ J - B.conj().T)) / scale,
                    np.max(np.abs(B - D @ M0 @ D)) / scale,
                    np.max(np.abs(L + 1j * abs(c.beta) * M)) / np.max(np.abs(L)))
    elapsed = time.perf_counter() - t0
    record(2, "exact algebra", worst <= 1e-14 and elapsed < 5.0,
           f"50 cases, max relative error {worst:.2e}, {elapsed:.2f}s")


def test_c3_M_and_B_share_nonzero_spectrum(random_cases):
    t0 = time.perf_counter()
    worst, count_mismatch = 0.0, 0
    for p, s, gamma, N in random_cases:
        c = slice_coefficients(ProblemInstance(p, gamma), s, (-N, N))
        m = eig_dense(build_Mq(c).to_dense())
        b = eig_dense(build_Bq(c).to_dense())
        m, b = m[np.abs(m) > 1e-6], b[np.abs(b) > 1e-6]
        if m.size != b.size:
            count_mismatch += 1
            continue
        worst = max(worst, match_multisets(m, b)[0])
    elapsed = time.perf_counter() - t0
    ok = count_mismatch == 0 and worst <= 1e-8 and elapsed < 120
    record(3, "M_q and B_q nonzero spectra coincide", ok,
           f"50 cases, max distance {worst:.2e}, count mismatches {count_mismatch}, {elapsed:.1f}s")


def test_c4_outside_slices_are_imaginary():
    slices = []
    for i, p in enumerate(BATTERY_P):
        outside = [s for s in enumerate_representatives(p, 8)
                   if not s.collinear and s.qhat.norm_sq() >= V(*p).norm_sq()]
        slices += [(p, s, BATTERY_GAMMA[(i + j) % 4]) for j, s in enumerate(outside[:4])]
    slices = slices[:20]
    worst = direct = 0.0
    for p, s, gamma in slices:
        inst = ProblemInstance(p, gamma)
        c = slice_coefficients(inst, s, (-256, 256))
        beta = abs(c.beta)
        worst = max(worst, np.max(np.abs(slice_spectrum(inst, s, 256).real)) / beta)
        # the library takes the Hermitian route here; the general solver on L_q must agree
        direct = max(direct, np.max(np.abs(eig_dense(build_Lq(c).to_dense(), hermitian=False).real)) / beta)
    ok = len(slices) == 20 and worst <= 1e-10 and direct <= 1e-10
    record(4, "slices outside the disk have imaginary spectrum", ok,
           f"{len(slices)} slices at N=256, max |Re|/|beta| = {worst:.2e} (Hermitian route), "
           f"{direct:.2e} (general solver on L_q)")


@pytest.fixture(scope="module")
def battery():
    t0 = time.perf_counter()
    reports = [nonimaginary_spectrum(ProblemInstance(p, g)) for p in BATTERY_P for g in BATTERY_GAMMA]
    return reports, time.perf_counter() - t0


def test_c5_count_bound(battery):
    reports, elapsed = battery
    bad = [(tuple(r.instance.p), r.instance.gamma) for r in reports
           if not r.converged or r.count > 2 * r.kappa]
    n_max = max(s.N for r in reports for s in r.per_slice)
    counts = ", ".join(f"{tuple(r.instance.p)}:{r.count}/{2 * r.kappa}" for r in reports[::4])
    record(5, "nonimaginary count <= 2 kappa", not bad and elapsed < 600 and n_max <= 1024,
           f"{len(reports)} instances, violations {bad}, N<= {n_max}, {elapsed:.0f}s; Gamma=1 counts {counts}")


def test_c6_axis_symmetry(battery):
    reports, _ = battery
    worst = 0.0
    for r in reports:
        z = r.nonimaginary_values()
        if z.size:
            worst = max(worst, match_multisets(z, -z)[0], match_multisets(z, z.conj())[0])
    record(6, "nonimaginary set symmetric about both axes", worst <= 1e-6,
           f"{len(reports)} instances, max asymmetry {worst:.2e}")


def test_c7_essential_spectrum_witness():
    cases = [((0, 2), (3, 0)), ((0, 2), (2, 0)), ((1, 1), (1, -1)), ((2, 1), (1, -2))]
    details, ok = [], True
    for p, q in cases:
        inst = ProblemInstance(p, 1)
        s = sd(q, p)
        d1, d2 = coverage_diagnostics(inst, s, 100), coverage_diagnostics(inst, s, 200)
        ratio = d2.max_gap / d1.max_gap
        beta = abs(slice_coefficients(inst, s, (0, 0)).beta)
        edge1 = max(2 - d1.z_max, d1.z_min + 2)
        edge2 = max(2 - d2.z_max, d2.z_min + 2)
        interval = essential_interval(inst, s)
        this = (0.45 <= ratio <= 0.55 and beta * edge2 <= beta * d2.max_gap and edge2 < edge1
                and math.isclose(interval.upper, 2 * beta) and d2.z_max <= 2 + 1e-12 and d2.z_min >= -2 - 1e-12)
        ok &= this
        details.append(f"{p}/{q}: ratio {ratio:.3f}, edge {edge1:.1e}->{edge2:.1e}")
    record(7, "essential spectrum fills [-2|beta|, 2|beta|]", ok, "; ".join(details))


def test_c8_decomposition_exactness():
    t0 = time.perf_counter()
    reps = [decomposition_crosscheck(ProblemInstance(p, 1 + 1j), 8) for p in [(1, 1), (0, 2)]]
    elapsed = time.perf_counter() - t0
    worst = max(r.max_mismatch for r in reps)
    record(8, "box spectrum is the union of slice spectra", worst <= 1e-9 and elapsed < 60,
           f"K=8, max mismatch {worst:.2e}, {elapsed:.1f}s")


def test_c9_instability_witness():
    t0 = time.perf_counter()
    inst = ProblemInstance((0, 2), 2)
    moved, found = 0.0, []
    for q in [(1, 0), (-1, 0), (1, 1), (-1, 1)]:
        s = sd(q, (0, 2))
        a, b = slice_spectrum(inst, s, 200), slice_spectrum(inst, s, 400)
        a, b = a[np.abs(a.real) > 1e-6], b[np.abs(b.real) > 1e-6]
        moved = max(moved, match_multisets(a, b)[0] if a.size == b.size else math.inf)
        found.extend(b)
    found = np.array(found)
    quad = np.array([GOLDEN_COMPLEX, -GOLDEN_COMPLEX, GOLDEN_COMPLEX.conjugate(), -GOLDEN_COMPLEX.conjugate()])
    has_quad = all(np.min(np.abs(found - z)) <= 1e-9 for z in quad)
    abscissa = float(np.max(found.real))
    chk = spectral_mapping_check(inst, 16, trials=3, t_final=40.0)
    rel = max(abs(r - abscissa) / abscissa for r in chk.rates)
    elapsed = time.perf_counter() - t0
    ok = (moved <= 1e-6 and has_quad and math.isclose(abscissa, GOLDEN_REAL, abs_tol=1e-9)
          and rel <= 0.05 and elapsed < 300)
    record(9, "instability witness p=(0,2), Gamma=2", ok,
           f"abscissa {abscissa:.12f}, N200->400 movement {moved:.1e}, quadruple {has_quad}, "
           f"rates {[round(r, 5) for r in chk.rates]} (rel err {rel:.1e}), {elapsed:.0f}s")


def test_c10_stability_witness():
    inst = ProblemInstance((0, 1), 1)
    rep = nonimaginary_spectrum(inst)
    chk = spectral_mapping_check(inst, 16, trials=3, t_final=100.0)
    ok = rep.nonimaginary == [] and rep.converged and max(chk.rates) <= 0.01
    record(10, "stability witness p=(0,1)", ok,
           f"nonimaginary {len(rep.nonimaginary)}, max fitted rate {max(chk.rates):.2e} over [0,100]")


def test_c11_resolvent_boundedness():
    inst = ProblemInstance((0, 2), 1)
    taus = [float(t) for t in np.arange(0, 101, 5)]
    rep = resolvent_report(inst, 16, 0.5, taus)
    norm = np.linalg.norm(build_L2D(inst, 16).to_dense(), 2)
    t, s = np.array(rep.taus), np.array(rep.samples)
    far = np.abs(0.5 + 1j * t) > norm
    bound_ok = bool(np.all(s[far] <= (1 + 1e-12) / (np.abs(0.5 + 1j * t[far]) - norm)))
    tail = t >= 50
    slope = np.polyfit(t[tail], s[tail], 1)[0]
    ok = rep.tail_ok and bool(far.any()) and bound_ok and slope <= 0
    record(11, "resolvent bounded on Re lambda = 0.5", ok,
           f"K=16, ||L||={norm:.3f}, max sample {s.max():.3f}, tail slope {slope:.2e}, "
           f"far-field bound {bound_ok} on {int(far.sum())} samples")


def test_c12_perturbation_decay_constant():
    worst, n = 0.0, 0
    for p in BATTERY_P:
        pn = math.sqrt(V(*p).norm_sq())
        for g in BATTERY_GAMMA:
            inst = ProblemInstance(p, g)
            for s in enumerate_representatives(p, 20):
                if s.collinear:
                    continue
                c = slice_coefficients(inst, s, (-40, 40))
                lhs = abs(c.beta) * np.max(np.abs(c.gamma_seq))
                rhs = abs(g) * pn / 2 / math.sqrt(s.qhat.norm_sq())
                worst = max(worst, lhs / rhs)
                n += 1
    # equality holds when qhat is orthogonal to p, so allow one rounding step
    record(12, "|beta| sup|gamma_n| <= (|Gamma||p|/2)/|qhat|", worst <= 1 + 1e-12,
           f"{n} representatives, max lhs/rhs {worst:.15f}")
