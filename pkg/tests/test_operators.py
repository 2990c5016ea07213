import math
import warnings

import numpy as np
import pytest

from eulerspec.coefficients import ProblemInstance, interaction_coefficient, slice_coefficients
from eulerspec.lattice import LatticeVector as V, SliceDescriptor, contributing_slices, enumerate_representatives, in_disk_window
from eulerspec.operators import (TridiagonalOperator, alternating_signature, box_modes, build_Bq,
                                 build_L2D, build_L2D_principal, build_Lq, build_M0, build_Mq,
                                 build_signature, slice_blocks)


def coeffs(p, qhat, gamma=1.0, N=6):
    return slice_coefficients(ProblemInstance(p, gamma), SliceDescriptor(V(*qhat), V(*p)), (-N, N))


def test_M0_free_spectrum_and_norm():
    ev = np.linalg.eigvalsh(build_M0(1, (0, 2)).to_dense())
    np.testing.assert_allclose(ev, [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-14)
    for m in (5, 12):
        a = build_M0(np.exp(0.7j), (0, m - 1)).to_dense()
        closed = 2 * np.cos(np.arange(1, m + 1) * np.pi / (m + 1))
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(a)), np.sort(closed), atol=1e-13)
        assert np.linalg.norm(a, 2) <= 2
        np.testing.assert_array_equal(a, a.conj().T)


def test_M0_rejects_non_unimodular():
    with pytest.raises(ValueError, match="unimodular"):
        build_M0(1.5, (0, 3))


def test_M0_acts_as_shift_sum():
    a = np.exp(0.3j)
    op = build_M0(a, (-3, 3))
    w = np.arange(7) + 1j
    out = op.matvec(w.copy())
    expect = np.array([(a * w[i - 1] if i > 0 else 0) + (np.conj(a) * w[i + 1] if i < 6 else 0)
                       for i in range(7)])
    np.testing.assert_allclose(out, expect, atol=1e-14)
    np.testing.assert_allclose(op.to_dense() @ w, expect, atol=1e-14)


def test_Bq_entries_p02():
    c = slice_coefficients(ProblemInstance((0, 2), 1), SliceDescriptor(V(1, 0), V(0, 2)), (0, 1))
    B = build_Bq(c)
    # alpha delta_0 delta_1 = (-i)(i sqrt 3)(1/sqrt 5), placed where alpha sits
    assert B.entry(1, 0) == pytest.approx(math.sqrt(3 / 5), abs=1e-15)
    assert B.entry(0, 1) == pytest.approx(-math.sqrt(3 / 5), abs=1e-15)


def test_Bq_hermitian_outside_disk():
    c = coeffs((0, 2), (3, 1), 1 + 1j, 20)
    B = build_Bq(c).to_dense()
    np.testing.assert_allclose(B, B.conj().T, atol=0)


def test_Bq_decouples_at_boundary_index():
    c = coeffs((1, 0), (0, 1), 1, 5)
    B = build_Bq(c).to_dense()
    i = 5  # n = 0
    assert np.all(B[i] == 0) and np.all(B[:, i] == 0)


def test_Lq_entry_and_identities():
    c = coeffs((0, 2), (1, 0), 1, 4)
    L = build_Lq(c)
    assert L.entry(1, 0) == pytest.approx(0.75)
    M = build_Mq(c).to_dense()
    np.testing.assert_allclose(L.to_dense(), -1j * abs(c.beta) * M, rtol=0, atol=1e-15)


def test_Mq_unperturbed_equals_M0():
    c = coeffs((2, 1), (1, -1), 1 - 1j, 7).with_gamma(0.0)
    np.testing.assert_array_equal(build_Mq(c).to_dense(), build_M0(c.alpha, (-7, 7)).to_dense())


@pytest.mark.parametrize("p,qhat,gamma", [((0, 2), (1, 1), 2), ((2, 1), (1, 0), 1j), ((2, 2), (1, -1), 1 + 1j),
                                          ((1, 1), (2, 0), 0.3)])
def test_exact_algebra(p, qhat, gamma):
    c = coeffs(p, qhat, gamma, 9)
    D = np.diag(c.delta_seq)
    M0 = build_M0(c.alpha, (-9, 9)).to_dense()
    B = build_Bq(c).to_dense()
    M = build_Mq(c).to_dense()
    L = build_Lq(c).to_dense()
    np.testing.assert_allclose(B, D @ M0 @ D, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(M, M0 @ D @ D, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(L, -1j * abs(c.beta) * M, rtol=1e-14, atol=1e-15)
    slc = SliceDescriptor(V(*qhat), V(*p), in_disk_window(qhat, p))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        J = build_signature(slc, (-9, 9), c.delta_seq).to_dense()
    np.testing.assert_allclose(J @ B @ J, B.conj().T, rtol=1e-14, atol=1e-15)
    Jh = np.diag(alternating_signature((-9, 9)))
    np.testing.assert_array_equal(Jh @ L @ Jh, -L)


def test_signature_examples():
    s = contributing_slices((0, 2))
    s10 = [x for x in s if x.qhat == (1, 0)][0]
    J = build_signature(s10, (-3, 3))
    assert list(J.signs) == [-1, -1, -1, 1, -1, -1, -1]
    s5 = [x for x in contributing_slices((0, 5)) if x.qhat == (1, 2)][0]
    J5 = build_signature(s5, (-3, 3))
    assert [n for n, j in zip(range(-3, 4), J5.signs) if j > 0] == [-1, 0]
    np.testing.assert_array_equal(J5.to_dense() @ J5.to_dense(), np.eye(7))


def test_signature_all_outside_is_minus_identity():
    slc = SliceDescriptor(V(3, 0), V(0, 2), None)
    with pytest.warns(UserWarning, match="J = -I"):
        J = build_signature(slc, (-4, 4))
    np.testing.assert_array_equal(J.signs, -1)
    B = build_Bq(coeffs((0, 2), (3, 0), 1 + 1j, 4)).to_dense()
    np.testing.assert_allclose(-B, (-B).conj().T, atol=0)


def test_signature_rejects_uncontained_window():
    s = [x for x in contributing_slices((0, 5)) if x.qhat == (1, 2)][0]
    with pytest.raises(ValueError):
        build_signature(s, (0, 3))


def test_window_mismatch_rejected():
    c = coeffs((0, 2), (1, 0), 1, 3)
    with pytest.raises(ValueError, match="window"):
        build_Bq(c, (-2, 2))


def test_json_round_trip():
    c = coeffs((2, 1), (1, 1), 1 - 0.5j, 3)
    for op in (build_Bq(c), build_Lq(c), build_Mq(c), build_M0(c.alpha, (-3, 3))):
        import json
        back = TridiagonalOperator.from_dict(json.loads(op.dumps()))
        np.testing.assert_array_equal(back.to_dense(), op.to_dense())
        assert back.kind == op.kind and back.window == op.window


def test_tridiagonal_invariants():
    c = coeffs((0, 2), (1, 1), 2, 5)
    for op in (build_Bq(c), build_Lq(c), build_Mq(c)):
        np.testing.assert_array_equal(op.diag, 0)
    M0 = build_M0(c.alpha, (-5, 5))
    np.testing.assert_allclose(np.abs(M0.sub), 1)
    np.testing.assert_array_equal(M0.sup, np.conj(M0.sub))


def test_L2D_zero_and_row_structure():
    inst0 = ProblemInstance((1, 1), 0)
    assert build_L2D(inst0, 4).matrix.nnz == 0
    inst = ProblemInstance((2, 1), 1 + 2j)
    box = build_L2D(inst, 6)
    A = box.matrix.tocsr()
    p = inst.p
    for i, k in enumerate(box.modes):
        row = A.getrow(i)
        assert row.nnz <= 2
        for j, v in zip(row.indices, row.data):
            nb = box.modes[j]
            if nb == k - p:
                assert v == pytest.approx(interaction_coefficient(p, k - p) * inst.gamma)
            else:
                assert nb == k + p
                assert v == pytest.approx(interaction_coefficient(-p, k + p) * inst.gamma.conjugate())
    # row k = p: k - p = 0 is not a mode, the only coupling is to 2p
    i = box.index[p]
    assert set(box.modes[j] for j in A.getrow(i).indices) <= {p + p}


def test_L2D_rejects_small_box():
    with pytest.raises(ValueError, match="too small"):
        build_L2D(ProblemInstance((3, 1), 1), 3)


def test_L2D_principal_is_skew_hermitian():
    for p, g in [((0, 2), 1), ((2, 1), 1 + 1j), ((1, -3), 2j)]:
        A = build_L2D_principal(ProblemInstance(p, g), 7).to_dense()
        np.testing.assert_allclose(A.conj().T, -A, atol=1e-15)


@pytest.mark.parametrize("p,gamma", [((1, 1), 1 + 1j), ((0, 2), 1 + 1j), ((2, 1), 0.7)])
def test_box_is_block_diagonal_over_slices(p, gamma):
    inst = ProblemInstance(p, gamma)
    box = build_L2D(inst, 8)
    A = box.to_dense()
    blocks = slice_blocks(box, inst.p)
    perm = np.concatenate([idx for _, (_, _, idx) in sorted(blocks.items())])
    assert sorted(perm) == list(range(box.dim))
    P = A[np.ix_(perm, perm)]
    start = 0
    for q, (lo, hi, idx) in sorted(blocks.items()):
        m = len(idx)
        blk = P[start:start + m, start:start + m]
        if q.x * inst.p.y - q.y * inst.p.x == 0:
            np.testing.assert_array_equal(blk, 0)
        else:
            c = slice_coefficients(inst, SliceDescriptor(q, inst.p), (lo, hi))
            np.testing.assert_allclose(blk, build_Lq(c).to_dense(), rtol=1e-14, atol=1e-15)
        P[start:start + m, start:start + m] = 0
        start += m
    assert np.count_nonzero(P) == 0


def test_box_modes_exclude_origin():
    modes = box_modes(3)
    assert len(modes) == 48 and (0, 0) not in modes
