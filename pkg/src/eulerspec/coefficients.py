"""Scalar kernels of the linearization: the interaction coefficient A(p, q),
the per-slice constants (beta, alpha, gamma_n, delta_n) and the physical-space
steady state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from eulerspec.lattice import LatticeVector, SliceDescriptor, as_vector, det2


@dataclass(frozen=True)
class Controls:
    """Numerical knobs shared by the spectral and evolution layers."""

    N0: int = 64
    N_max: int = 1024
    eig_tol: float = 1e-8
    classify_tol: float = 1e-6

    def __post_init__(self):
        if self.N0 < 8:
            raise ValueError("N0 must be at least 8")
        if self.N_max < self.N0:
            raise ValueError("N_max must be >= N0")
        if self.eig_tol <= 0 or self.classify_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class ProblemInstance:
    """Steady state with vorticity modes Gamma/2 at k = p and conj(Gamma)/2 at k = -p."""

    p: LatticeVector
    gamma: complex
    controls: Controls = field(default_factory=Controls)

    def __post_init__(self):
        p = as_vector(self.p)
        if p.is_zero():
            raise ValueError("p must be nonzero")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "gamma", complex(self.gamma))

    @property
    def a(self) -> float:
        return self.gamma.real

    @property
    def b(self) -> float:
        return self.gamma.imag

    def threshold(self, beta_abs: float) -> float:
        """|Re lambda| above which an eigenvalue counts as nonimaginary."""
        return max(self.controls.classify_tol, self.controls.classify_tol * beta_abs)

    def to_dict(self) -> dict:
        c = self.controls
        return {
            "p": [self.p.x, self.p.y],
            "gamma": [self.gamma.real, self.gamma.imag],
            "controls": {"N0": c.N0, "N_max": c.N_max, "eig_tol": c.eig_tol,
                         "classify_tol": c.classify_tol},
        }


@dataclass(frozen=True)
class SliceCoefficients:
    """beta, alpha and the sequences gamma_n, delta_n on indices n_lo..n_hi."""

    beta: complex
    alpha: complex
    n_lo: int
    n_hi: int
    gamma_seq: np.ndarray
    delta_seq: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    @property
    def size(self) -> int:
        return self.n_hi - self.n_lo + 1

    def with_gamma(self, gamma_seq) -> "SliceCoefficients":
        """Copy with gamma_n overridden (delta_n recomputed); for unperturbed tests."""
        g = np.broadcast_to(np.asarray(gamma_seq, dtype=float), (self.size,)).copy()
        return SliceCoefficients(self.beta, self.alpha, self.n_lo, self.n_hi, g, _delta(1.0 + g))


def interaction_coefficient(p, q) -> float:
    """A(p, q) = (1/|p|^2 - 1/|q|^2) det(p, q) / 2, and 0 when p = +-q or either vanishes."""
    p, q = as_vector(p), as_vector(q)
    if p.is_zero() or q.is_zero() or p == q or p == -q:
        return 0.0
    pp, qq = p.norm_sq(), q.norm_sq()
    # (1/pp - 1/qq) = (qq - pp) / (pp qq), kept exact until the final division
    return (qq - pp) * det2(p, q) / (2.0 * pp * qq)


def _delta(one_plus_gamma: np.ndarray) -> np.ndarray:
    mag = np.sqrt(np.abs(one_plus_gamma))
    return np.where(one_plus_gamma >= 0, mag + 0j, 1j * mag)


def slice_coefficients(inst: ProblemInstance, slc: SliceDescriptor, n_range) -> SliceCoefficients:
    p, qhat = inst.p, as_vector(slc.qhat)
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if n_hi < n_lo:
        raise ValueError("empty index range")
    d = det2(qhat, p)
    if d == 0:
        raise ValueError(f"slice through {tuple(qhat)} is collinear with p; beta vanishes")
    pp = p.norm_sq()
    beta = -d * inst.gamma / (2.0 * pp)
    if beta == 0:
        raise ValueError("Gamma = 0 gives beta = 0; the slice operator vanishes")
    alpha = 1j * beta / abs(beta)
    n = np.arange(n_lo, n_hi + 1)
    norms = (qhat.x + n * p.x) ** 2 + (qhat.y + n * p.y) ** 2
    gamma_seq = -pp / norms
    # sign of 1 + gamma_n decided on integers so the boundary |q + n p| = |p| gives exactly 0
    one_plus = (norms - pp) / norms
    return SliceCoefficients(beta, alpha, n_lo, n_hi, gamma_seq, _delta(one_plus))


def steady_state_fields(inst: ProblemInstance, x, y):
    """Vorticity and velocity (Omega0, u0, v0) of the steady state at (x, y)."""
    p = inst.p
    a, b = inst.a, inst.b
    phase = p.x * np.asarray(x) + p.y * np.asarray(y)
    s, c = np.sin(phase), np.cos(phase)
    pp = p.norm_sq()
    omega = a * c - b * s
    u = (-p.y * a * s - p.y * b * c) / pp
    v = (p.x * a * s + p.x * b * c) / pp
    return omega, u, v
