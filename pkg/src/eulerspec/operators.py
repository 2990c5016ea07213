"""Finite truncations of the slice operators (M0, M_q, B_q, L_q, J_q) and of
the full linearized operator on a box of Fourier modes.

Tridiagonal conventions: ``sub[i]`` is entry (n+1, n) and ``sup[i]`` is entry
(n, n+1) for n = n_lo + i.  The free operator acts as
(M0 w)_n = alpha w_{n-1} + conj(alpha) w_{n+1}, so alpha sits on the
subdiagonal and L_q = -i |beta| M_q holds entry by entry.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from eulerspec.coefficients import ProblemInstance, SliceCoefficients, interaction_coefficient
from eulerspec.lattice import LatticeVector, SliceDescriptor, det2, slice_representative

KINDS = ("Lq", "M0", "Mq", "Bq")


@dataclass(frozen=True)
class TridiagonalOperator:
    n_lo: int
    n_hi: int
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    kind: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        m = self.size
        if self.diag.shape != (m,) or self.sub.shape != (m - 1,) or self.sup.shape != (m - 1,):
            raise ValueError("band lengths do not match the window")

    @property
    def size(self) -> int:
        return self.n_hi - self.n_lo + 1

    @property
    def window(self) -> Tuple[int, int]:
        return self.n_lo, self.n_hi

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag.astype(complex))
        if self.size > 1:
            a += np.diag(self.sub, -1) + np.diag(self.sup, 1)
        return a

    def matvec(self, w: np.ndarray) -> np.ndarray:
        out = self.diag * w
        out[1:] += self.sub * w[:-1]
        out[:-1] += self.sup * w[1:]
        return out

    def entry(self, n: int, m: int) -> complex:
        i, j = n - self.n_lo, m - self.n_lo
        if not (0 <= i < self.size and 0 <= j < self.size):
            raise IndexError((n, m))
        if i == j:
            return complex(self.diag[i])
        if i == j + 1:
            return complex(self.sub[j])
        if j == i + 1:
            return complex(self.sup[i])
        return 0j

    def to_dict(self) -> dict:
        pair = lambda arr: [[float(z.real), float(z.imag)] for z in np.asarray(arr, dtype=complex)]
        return {
            "kind": self.kind,
            "window": [self.n_lo, self.n_hi],
            "sub": pair(self.sub),
            "diag": pair(self.diag),
            "super": pair(self.sup),
            "provenance": _jsonable(self.provenance),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TridiagonalOperator":
        unpair = lambda rows: np.array([complex(r, i) for r, i in rows], dtype=complex)
        lo, hi = d["window"]
        return cls(lo, hi, unpair(d["sub"]), unpair(d["diag"]), unpair(d["super"]),
                   d["kind"], dict(d.get("provenance", {})))


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (tuple, list)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _check_window(coeffs: SliceCoefficients, window) -> None:
    if window is not None and tuple(window) != (coeffs.n_lo, coeffs.n_hi):
        raise ValueError(f"window {tuple(window)} does not match coefficient range "
                         f"{(coeffs.n_lo, coeffs.n_hi)}")


def build_M0(alpha: complex, window) -> TridiagonalOperator:
    alpha = complex(alpha)
    if abs(abs(alpha) - 1.0) > 1e-12:
        raise ValueError(f"alpha must be unimodular, |alpha| = {abs(alpha)}")
    lo, hi = window
    m = hi - lo + 1
    return TridiagonalOperator(lo, hi, np.full(m - 1, alpha), np.zeros(m, complex),
                               np.full(m - 1, alpha.conjugate()), "M0", {"alpha": alpha})


def _provenance(coeffs: SliceCoefficients, extra=None) -> dict:
    prov = {"beta": complex(coeffs.beta), "alpha": complex(coeffs.alpha)}
    prov.update(extra or {})
    return prov


def build_Bq(coeffs: SliceCoefficients, window=None, **prov) -> TridiagonalOperator:
    """B_q = diag(delta) M0 diag(delta)."""
    _check_window(coeffs, window)
    a, d = coeffs.alpha, coeffs.delta_seq
    dd = d[:-1] * d[1:]
    return TridiagonalOperator(coeffs.n_lo, coeffs.n_hi, a * dd, np.zeros(coeffs.size, complex),
                               a.conjugate() * dd, "Bq", _provenance(coeffs, prov))


def build_Mq(coeffs: SliceCoefficients, window=None, **prov) -> TridiagonalOperator:
    """M_q = M0 diag(1 + gamma_n)."""
    _check_window(coeffs, window)
    a, g1 = coeffs.alpha, 1.0 + coeffs.gamma_seq
    return TridiagonalOperator(coeffs.n_lo, coeffs.n_hi, a * g1[:-1], np.zeros(coeffs.size, complex),
                               a.conjugate() * g1[1:], "Mq", _provenance(coeffs, prov))


def build_Lq(coeffs: SliceCoefficients, window=None, **prov) -> TridiagonalOperator:
    """L_q = (V beta - V* conj(beta)) diag(1 + gamma_n), V the forward shift."""
    _check_window(coeffs, window)
    b, g1 = coeffs.beta, 1.0 + coeffs.gamma_seq
    return TridiagonalOperator(coeffs.n_lo, coeffs.n_hi, b * g1[:-1], np.zeros(coeffs.size, complex),
                               -b.conjugate() * g1[1:], "Lq", _provenance(coeffs, prov))


@dataclass(frozen=True)
class SignatureOperator:
    """J = diag(+-1): +1 on in-disk indices, -1 elsewhere."""

    n_lo: int
    n_hi: int
    signs: np.ndarray

    @property
    def positive_count(self) -> int:
        return int(np.sum(self.signs > 0))

    def to_dense(self) -> np.ndarray:
        return np.diag(self.signs.astype(float))

    def conjugates_delta(self, delta_seq: np.ndarray) -> bool:
        """J diag(delta) == -diag(delta)^*.

        The sign is global, so J B J = (J D) M0 (D J) = D^* M0 D^* = B^* follows.
        """
        return bool(np.array_equal(self.signs * delta_seq, -np.conj(delta_seq)))


def build_signature(slc: SliceDescriptor, window, delta_seq: Optional[np.ndarray] = None) -> SignatureOperator:
    lo, hi = window
    n = np.arange(lo, hi + 1)
    if slc.window is None:
        warnings.warn(f"slice {tuple(slc.qhat)} has no in-disk points; J = -I", stacklevel=2)
        signs = -np.ones(n.size, dtype=int)
    else:
        wlo, whi = slc.window
        if wlo < lo or whi > hi:
            raise ValueError(f"in-disk window {slc.window} not contained in {tuple(window)}")
        signs = np.where((n >= wlo) & (n <= whi), 1, -1)
    J = SignatureOperator(lo, hi, signs)
    if delta_seq is not None and not J.conjugates_delta(delta_seq):
        raise ValueError("J diag(delta) != -diag(delta)^*: window and delta disagree")
    return J


def alternating_signature(window) -> np.ndarray:
    """Diagonal of diag((-1)^n), which anticommutes with every slice operator."""
    lo, hi = window
    return np.where(np.arange(lo, hi + 1) % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class BoxOperator2D:
    """Linearized operator on the modes 0 < |k|_inf <= K (k = 0 excluded)."""

    K: int
    modes: List[LatticeVector]
    index: Dict[LatticeVector, int]
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return len(self.modes)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def box_modes(K: int) -> List[LatticeVector]:
    return [LatticeVector(x, y) for x in range(-K, K + 1) for y in range(-K, K + 1)
            if (x, y) != (0, 0)]


def _box(inst: ProblemInstance, K: int, coupling) -> BoxOperator2D:
    p = inst.p
    if K < max(abs(p.x), abs(p.y)) + 1:
        raise ValueError(f"box half-width K={K} too small for p={tuple(p)}; "
                         f"need K >= {max(abs(p.x), abs(p.y)) + 1}")
    modes = box_modes(K)
    index = {k: i for i, k in enumerate(modes)}
    rows, cols, vals = [], [], []
    for i, k in enumerate(modes):
        for nb, val in coupling(k):
            j = index.get(nb)
            if j is not None and val != 0:
                rows.append(i)
                cols.append(j)
                vals.append(val)
    n = len(modes)
    mat = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(n, n))
    return BoxOperator2D(K, modes, index, mat)


def build_L2D(inst: ProblemInstance, K: int) -> BoxOperator2D:
    """(L w)_k = A(p, k-p) Gamma w_{k-p} + A(-p, k+p) conj(Gamma) w_{k+p}, Dirichlet-truncated."""
    p, g = inst.p, inst.gamma
    return _box(inst, K, lambda k: (
        (k - p, interaction_coefficient(p, k - p) * g),
        (k + p, interaction_coefficient(-p, k + p) * g.conjugate()),
    ))


def build_L2D_principal(inst: ProblemInstance, K: int) -> BoxOperator2D:
    """The skew-adjoint part L0 = W D0 - W* D0*, i.e. L with the 1/|k|^2 term of A dropped."""
    p, g = inst.p, inst.gamma
    pp = p.norm_sq()
    return _box(inst, K, lambda k: (
        (k - p, det2(p, k) * g / (2.0 * pp)),
        (k + p, -det2(p, k) * g.conjugate() / (2.0 * pp)),
    ))


def slice_blocks(box: BoxOperator2D, p) -> Dict[LatticeVector, Tuple[int, int, List[int]]]:
    """Group box modes by slice.

    Returns qhat -> (n_lo, n_hi, mode indices ordered by n).  Slices meet a
    convex box in a run of consecutive n, which is checked here for the
    non-collinear ones.
    """
    groups: Dict[LatticeVector, List[Tuple[int, int]]] = {}
    pp = p[0] * p[0] + p[1] * p[1]
    for i, k in enumerate(box.modes):
        q = slice_representative(k, p)
        n, rem = divmod((k - q).dot(p), pp)
        assert rem == 0
        groups.setdefault(q, []).append((n, i))
    out = {}
    for q, items in groups.items():
        items.sort()
        ns = [n for n, _ in items]
        # the collinear slice through 0 loses k = 0; its block is zero anyway
        if det2(q, p) != 0 and ns != list(range(ns[0], ns[-1] + 1)):
            raise AssertionError(f"slice {tuple(q)} meets the box in a non-contiguous set")
        out[q] = (ns[0], ns[-1], [i for _, i in items])
    return out
