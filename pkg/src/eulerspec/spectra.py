"""Eigenvalue engine for the slice operators and the computable consequences
of the spectral theory: nonimaginary eigenvalues with truncation-convergence
control, the 2*kappa bound, axis symmetry, essential-spectrum witnesses,
resolvent norms on the box, and the exact slice decomposition of the box
operator.

Eigenvalues are reported in the lambda-plane of L; the symmetrized operator
B_q lives in the z-plane with lambda = -i |beta| z.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from eulerspec.coefficients import ProblemInstance, slice_coefficients
from eulerspec.lattice import (LatticeVector, SliceDescriptor, as_vector, contributing_slices,
                               det2, in_disk_window, kappa)
from eulerspec.operators import build_Bq, build_L2D, build_Lq, slice_blocks

log = logging.getLogger(__name__)

SCHEDULE_FACTOR = 2
SYMMETRY_TOL = 1e-6
CROSSCHECK_TOL = 1e-8
DECOMPOSITION_TOL = 1e-9


class EigenSolverError(RuntimeError):
    """Dense eigensolver failed; ``partial`` holds whatever was recovered."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class CrossCheckError(RuntimeError):
    pass


def worker_count() -> int:
    env = os.environ.get("EULER_SPEC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _pool_map(fn, items):
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- dense eigensolver

def eig_dense(matrix, vectors: bool = False, hermitian: Optional[bool] = None):
    """All eigenvalues (with multiplicity) of a dense square matrix.

    LAPACK's Hessenberg/shifted-QR drivers do the work (``heevd`` for
    Hermitian input, ``geev`` otherwise).  Hermitian input is detected
    exactly unless ``hermitian`` is given.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"eig_dense needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if a.shape[0] == 0:
        return (np.zeros(0, complex), np.zeros((0, 0), complex)) if vectors else np.zeros(0, complex)
    if hermitian is None:
        hermitian = bool(np.array_equal(a, a.conj().T))
    try:
        if hermitian:
            out = sla.eigh(a) if vectors else sla.eigvalsh(a)
        else:
            out = sla.eig(a) if vectors else sla.eigvals(a)
    except (sla.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"dense eigensolve did not converge: {exc}") from exc
    if vectors:
        w, v = out
        return w.astype(complex), v.astype(complex)
    return np.asarray(out).astype(complex)


def residuals(matrix, w, v) -> np.ndarray:
    """||A v - w v|| per unit-norm eigenvector column."""
    a = np.asarray(matrix)
    v = v / np.linalg.norm(v, axis=0)
    return np.linalg.norm(a @ v - v * w[None, :], axis=0)


# ---------------------------------------------------------------- multiset matching

def match_multisets(a, b) -> Tuple[float, np.ndarray, np.ndarray]:
    """Pair two equal-size multisets of complex numbers.

    Greedy nearest neighbour first; if that leaves a pair further apart than
    the optimal assignment would, the Hungarian solution is returned.
    Returns (max distance, index into a, index into b).
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError(f"multiset sizes differ: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0, np.zeros(0, int), np.zeros(0, int)
    used = np.zeros(b.size, bool)
    pair = np.empty(a.size, int)
    for i in np.argsort(-np.abs(a), kind="stable"):
        d = np.abs(b - a[i])
        d[used] = np.inf
        j = int(np.argmin(d))
        used[j] = True
        pair[i] = j
    greedy = float(np.max(np.abs(a - b[pair])))
    ia = np.arange(a.size)
    if greedy == 0.0 or a.size > 4000:
        return greedy, ia, pair
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    hung = float(np.max(cost[r, c]))
    # linear_sum_assignment minimises the sum, not the max; keep the better of the two
    if hung < greedy:
        return hung, r, c
    return greedy, ia, pair


def multiset_distance(a, b) -> float:
    return match_multisets(a, b)[0]


def cluster(values, radius: float) -> List[Tuple[complex, int]]:
    """Group numbers closer than ``radius`` (single linkage); (centroid, count) per group."""
    vals = list(np.asarray(values, dtype=complex).ravel())
    groups: List[List[complex]] = []
    for z in sorted(vals, key=lambda c: (c.real, c.imag)):
        hit = [g for g in groups if min(abs(z - w) for w in g) <= radius]
        if not hit:
            groups.append([z])
            continue
        merged = hit[0]
        merged.append(z)
        for g in hit[1:]:
            merged.extend(g)
            groups.remove(g)
    out = [(complex(np.mean(g)), len(g)) for g in groups]
    return sorted(out, key=lambda t: (t[0].real, t[0].imag))


def check_symmetry(eigs, tol: float = SYMMETRY_TOL) -> bool:
    """True iff the multiset is closed under lambda -> -lambda and lambda -> conj(lambda)."""
    e = np.asarray(eigs, dtype=complex).ravel()
    return multiset_distance(e, -e) <= tol and multiset_distance(e, e.conj()) <= tol


# ---------------------------------------------------------------- per-slice spectra

def _slice_eigs(inst: ProblemInstance, slc: SliceDescriptor, N: int, crosscheck: bool):
    """(lambda eigenvalues, cross-check discrepancy, |beta|) on the window [-N, N]."""
    coeffs = slice_coefficients(inst, slc, (-N, N))
    beta_abs = abs(coeffs.beta)
    B = build_Bq(coeffs).to_dense()
    hermitian = in_disk_window(slc.qhat, inst.p) is None
    z = eig_dense(B, hermitian=hermitian)
    if hermitian:
        z = z.real.astype(complex)
    lam = -1j * beta_abs * z
    discrepancy = 0.0
    if crosscheck:
        direct = eig_dense(build_Lq(coeffs).to_dense(), hermitian=False)
        _, ia, ib = match_multisets(lam, direct)
        gap = np.abs(lam[ia] - direct[ib])
        # near-zero pairs are excluded: zero can be defective and split like sqrt(eps)
        off_zero = np.maximum(np.abs(lam[ia]), np.abs(direct[ib])) > 1e-6 * beta_abs
        discrepancy = float(gap[off_zero].max()) if off_zero.any() else 0.0
    return lam, discrepancy, beta_abs


def slice_spectrum(inst: ProblemInstance, slc: SliceDescriptor, N: int,
                   crosscheck: bool = True) -> np.ndarray:
    """Eigenvalues of L_q truncated to [-N, N], computed through B_q.

    The B_q route is cross-checked against a direct eigensolve of L_q.
    """
    if N < 8:
        raise ValueError("N must be at least 8")
    if det2(slc.qhat, inst.p) == 0 or inst.gamma == 0:
        return np.zeros(1, complex)
    lam, disc, beta_abs = _slice_eigs(inst, slc, N, crosscheck)
    if disc > CROSSCHECK_TOL * beta_abs:
        raise CrossCheckError(f"B_q and L_q spectra disagree by {disc:.3e} on slice "
                              f"{tuple(slc.qhat)} at N={N}")
    return lam


def nonimaginary_part(lam, threshold: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    return lam[np.abs(lam.real) > threshold]


# ---------------------------------------------------------------- reports

@dataclass
class SliceSpectrum:
    slice: SliceDescriptor
    eigenvalues: np.ndarray
    N: int
    converged: bool
    residual: float
    beta_abs: float

    @property
    def window(self) -> Tuple[int, int]:
        return -self.N, self.N


@dataclass(frozen=True)
class NonimaginaryEigenvalue:
    value: complex
    multiplicity: int
    qhat: LatticeVector


@dataclass
class SpectrumReport:
    instance: ProblemInstance
    per_slice: List[SliceSpectrum]
    nonimaginary: List[NonimaginaryEigenvalue]
    kappa: int
    bound_ok: bool
    symmetry_ok: bool

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.per_slice)

    @property
    def count(self) -> int:
        return sum(e.multiplicity for e in self.nonimaginary)

    def nonimaginary_values(self) -> np.ndarray:
        vals = []
        for e in self.nonimaginary:
            vals.extend([e.value] * e.multiplicity)
        return np.array(vals, dtype=complex)

    def max_real_part(self) -> float:
        """Largest Re lambda over the nonimaginary set, 0 if the set is empty."""
        if not self.nonimaginary:
            return 0.0
        return max(e.value.real for e in self.nonimaginary)

    def to_dict(self) -> dict:
        pair = lambda z: [float(z.real), float(z.imag)]
        return {
            "schema": 1,
            "kind": "spectrum",
            "instance": self.instance.to_dict(),
            "kappa": self.kappa,
            "count": self.count,
            "bound_ok": self.bound_ok,
            "symmetry_ok": self.symmetry_ok,
            "converged": self.converged,
            "slices": [
                {
                    "qhat": [s.slice.qhat.x, s.slice.qhat.y],
                    "in_disk_window": list(s.slice.window) if s.slice.window else None,
                    "window": list(s.window),
                    "beta_abs": s.beta_abs,
                    "converged": s.converged,
                    "residual": s.residual,
                    "eigenvalues": [pair(z) for z in _sorted(s.eigenvalues)],
                }
                for s in self.per_slice
            ],
            "nonimaginary": [
                {"value": pair(e.value), "multiplicity": e.multiplicity,
                 "qhat": [e.qhat.x, e.qhat.y]}
                for e in self.nonimaginary
            ],
        }

    def csv_rows(self) -> List[Tuple]:
        """One row per eigenvalue: qhat_x, qhat_y, re, im, converged."""
        rows = []
        for s in self.per_slice:
            for z in _sorted(s.eigenvalues):
                rows.append((s.slice.qhat.x, s.slice.qhat.y, float(z.real), float(z.imag),
                             s.converged))
        return rows


def _sorted(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def converge_slice(inst: ProblemInstance, slc: SliceDescriptor) -> SliceSpectrum:
    """Double N until the nonimaginary eigenvalues stop moving by more than eig_tol."""
    c = inst.controls
    if det2(slc.qhat, inst.p) == 0 or inst.gamma == 0:
        return SliceSpectrum(slc, np.zeros(1, complex), c.N0, True, 0.0, 0.0)
    N, prev, lam, disc, beta_abs = c.N0, None, None, 0.0, 0.0
    while N <= c.N_max:
        lam, disc, beta_abs = _slice_eigs(inst, slc, N, crosscheck=True)
        if disc > CROSSCHECK_TOL * beta_abs:
            raise CrossCheckError(f"B_q and L_q spectra disagree by {disc:.3e} on slice "
                                  f"{tuple(slc.qhat)} at N={N}")
        cur = nonimaginary_part(lam, inst.threshold(beta_abs))
        if prev is not None and cur.size == prev.size and multiset_distance(cur, prev) < c.eig_tol:
            return SliceSpectrum(slc, lam, N, True, disc, beta_abs)
        prev = cur
        N *= SCHEDULE_FACTOR
    log.warning("slice %s: nonimaginary eigenvalues not converged at N=%d",
                tuple(slc.qhat), N // SCHEDULE_FACTOR)
    return SliceSpectrum(slc, lam, N // SCHEDULE_FACTOR, False, disc, beta_abs)


def nonimaginary_spectrum(inst: ProblemInstance) -> SpectrumReport:
    """Nonimaginary point spectrum of L, collected from the slices meeting the open disk."""
    slices = contributing_slices(inst.p)
    per_slice = _pool_map(lambda s: converge_slice(inst, s), slices)
    found: List[NonimaginaryEigenvalue] = []
    for s in per_slice:
        if s.beta_abs == 0:
            continue
        cur = nonimaginary_part(s.eigenvalues, inst.threshold(s.beta_abs))
        for value, mult in cluster(cur, 10 * inst.controls.eig_tol):
            found.append(NonimaginaryEigenvalue(value, mult, s.slice.qhat))
    k = kappa(inst.p)
    count = sum(e.multiplicity for e in found)
    all_vals = np.array([e.value for e in found for _ in range(e.multiplicity)], dtype=complex)
    return SpectrumReport(inst, per_slice, found, k, count <= 2 * k, check_symmetry(all_vals))


# ---------------------------------------------------------------- essential spectrum

@dataclass(frozen=True)
class EssentialInterval:
    """The segment i[-2|beta|, 2|beta|] of the imaginary axis."""

    beta_abs: float

    @property
    def lower(self) -> float:
        return -2.0 * self.beta_abs

    @property
    def upper(self) -> float:
        return 2.0 * self.beta_abs

    def contains(self, lam: complex, tol: float = 0.0) -> bool:
        return abs(lam.real) <= tol and self.lower - tol <= lam.imag <= self.upper + tol


def essential_interval(inst: ProblemInstance, slc: SliceDescriptor) -> EssentialInterval:
    p, q = inst.p, as_vector(slc.qhat)
    d = det2(q, p)
    if d == 0:
        raise ValueError(f"slice through {tuple(q)} is collinear with p")
    return EssentialInterval(abs(d) * abs(inst.gamma) / (2.0 * p.norm_sq()))


@dataclass(frozen=True)
class CoverageDiagnostics:
    max_gap: float
    interior_gap: float
    z_min: float
    z_max: float
    eigenvalues: np.ndarray


def coverage_diagnostics(inst: ProblemInstance, slc: SliceDescriptor, N: int,
                         gamma_override=None) -> CoverageDiagnostics:
    """How densely the truncated B_q spectrum fills [-2, 2]."""
    if in_disk_window(slc.qhat, inst.p) is not None:
        raise ValueError(f"slice {tuple(slc.qhat)} meets the open disk; B_q is not Hermitian")
    coeffs = slice_coefficients(inst, slc, (-N, N))
    if gamma_override is not None:
        coeffs = coeffs.with_gamma(gamma_override)
    z = np.sort(eig_dense(build_Bq(coeffs).to_dense(), hermitian=True).real)
    inside = z[(z >= -2) & (z <= 2)]
    interior = float(np.max(np.diff(inside))) if inside.size > 1 else 4.0
    edges = max(2.0 - inside[-1], inside[0] + 2.0) if inside.size else 4.0
    return CoverageDiagnostics(max(interior, edges), interior, float(z[0]), float(z[-1]), z)


def essential_coverage(inst: ProblemInstance, slc: SliceDescriptor, N: int,
                       gamma_override=None) -> float:
    """Largest hole in [-2, 2] left by the truncated B_q spectrum (edges included)."""
    return coverage_diagnostics(inst, slc, N, gamma_override).max_gap


# ---------------------------------------------------------------- resolvent

def operator_norm(matrix) -> float:
    a = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix)
    if a.size == 0:
        return 0.0
    return float(sla.svdvals(a)[0])


def resolvent_norm_samples(inst: ProblemInstance, K: int, a: float, taus: Sequence[float]) -> List[float]:
    """||(lambda - L)^-1|| = 1 / sigma_min(lambda - L) on the box, lambda = a + i tau."""
    if a == 0:
        raise ValueError("a must be nonzero; lambda may hit the imaginary-axis spectrum")
    L = build_L2D(inst, K).to_dense()
    eye = np.eye(L.shape[0])
    out = []
    for tau in taus:
        lam = complex(a, tau)
        smin = sla.svdvals(lam * eye - L)[-1]
        out.append(float(np.inf) if smin == 0 else float(1.0 / smin))
    return out


@dataclass
class ResolventReport:
    instance: ProblemInstance
    K: int
    a: float
    taus: List[float]
    samples: List[float]
    op_norm: float
    split: float

    @property
    def tail_ok(self) -> bool:
        """No increasing trend: the tail never exceeds the near-field maximum."""
        near = [s for t, s in zip(self.taus, self.samples) if abs(t) < self.split]
        far = [s for t, s in zip(self.taus, self.samples) if abs(t) >= self.split]
        if not near or not far:
            return True
        return max(far) <= max(near)

    @property
    def far_field_ok(self) -> bool:
        """Neumann bound ||R(lambda)|| <= 1 / (|lambda| - ||L||) where |lambda| > ||L||."""
        for t, s in zip(self.taus, self.samples):
            mod = abs(complex(self.a, t))
            if mod > self.op_norm and s > (1.0 + 1e-12) / (mod - self.op_norm):
                return False
        return True

    @property
    def ok(self) -> bool:
        return self.tail_ok and self.far_field_ok

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "resolvent",
            "instance": self.instance.to_dict(),
            "K": self.K,
            "a": self.a,
            "op_norm": self.op_norm,
            "split": self.split,
            "samples": [[t, s] for t, s in zip(self.taus, self.samples)],
            "tail_ok": self.tail_ok,
            "far_field_ok": self.far_field_ok,
        }

    def csv_rows(self):
        return [(t, s) for t, s in zip(self.taus, self.samples)]


def resolvent_report(inst: ProblemInstance, K: int, a: float, taus: Sequence[float],
                     split: float = 20.0) -> ResolventReport:
    samples = resolvent_norm_samples(inst, K, a, taus)
    norm = operator_norm(build_L2D(inst, K).matrix)
    return ResolventReport(inst, K, a, [float(t) for t in taus], samples, norm, split)


# ---------------------------------------------------------------- decomposition

@dataclass
class DecompositionReport:
    n_modes: int
    max_mismatch: float
    per_slice: Dict[LatticeVector, float] = field(default_factory=dict)
    box_eigenvalues: Optional[np.ndarray] = None
    slice_eigenvalues: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.max_mismatch <= DECOMPOSITION_TOL

    def worst_slices(self, n: int = 5):
        return sorted(self.per_slice.items(), key=lambda kv: -kv[1])[:n]


def decomposition_crosscheck(inst: ProblemInstance, K: int) -> DecompositionReport:
    """Compare eig(L on the box) with the union of windowed slice spectra."""
    box = build_L2D(inst, K)
    full = eig_dense(box.to_dense(), hermitian=False)
    parts, owner = [], []
    for q, (lo, hi, idx) in sorted(slice_blocks(box, inst.p).items()):
        if det2(q, inst.p) == 0 or inst.gamma == 0:
            ev = np.zeros(len(idx), complex)
        else:
            coeffs = slice_coefficients(inst, SliceDescriptor(q, inst.p), (lo, hi))
            ev = eig_dense(build_Lq(coeffs).to_dense(), hermitian=False)
        parts.append(ev)
        owner.extend([q] * len(ev))
    union = np.concatenate(parts) if parts else np.zeros(0, complex)
    worst, ia, ib = match_multisets(union, full)
    per_slice: Dict[LatticeVector, float] = {}
    for i, j in zip(ia, ib):
        q = owner[i]
        per_slice[q] = max(per_slice.get(q, 0.0), float(abs(union[i] - full[j])))
    rep = DecompositionReport(box.dim, worst, per_slice, full, union)
    if not rep.ok:
        log.error("decomposition mismatch %.3e; worst slices %s", worst, rep.worst_slices())
    return rep
