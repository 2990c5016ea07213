"""Time evolution of the box-truncated linearized system and exponential
growth-rate fits, used to check growth against the spectral abscissa."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from eulerspec.coefficients import ProblemInstance
from eulerspec.lattice import det2
from eulerspec.operators import BoxOperator2D, build_L2D, slice_blocks
from eulerspec.spectra import SpectrumReport, _pool_map, nonimaginary_spectrum

STABILITY_LIMIT = 0.5
SUBEXPONENTIAL_RATE = 0.01
RELATIVE_RATE_TOL = 0.05


class StabilityError(ValueError):
    def __init__(self, dt: float, max_dt: float):
        super().__init__(f"dt={dt:g} violates dt*||L|| <= {STABILITY_LIMIT}; "
                         f"use dt <= {max_dt:.6g}")
        self.dt = dt
        self.max_dt = max_dt


@dataclass
class StateVector:
    K: int
    values: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass
class Trajectory:
    times: np.ndarray
    norms: np.ndarray
    final: Optional[np.ndarray] = None
    snapshots: Optional[List[np.ndarray]] = None
    max_conjugate_defect: float = 0.0

    def csv_rows(self):
        return [(float(t), float(n)) for t, n in zip(self.times, self.norms)]


def box_norm(box: BoxOperator2D, p) -> float:
    """Spectral norm of the box operator, taken blockwise over slices (exact)."""
    A = box.matrix.tocsr()
    best = 0.0
    for q, (_, _, idx) in slice_blocks(box, p).items():
        if det2(q, p) == 0:
            continue
        blk = A[idx][:, idx].toarray()
        if blk.size:
            best = max(best, float(np.linalg.norm(blk, 2)))
    return best


def conjugate_map(box: BoxOperator2D) -> np.ndarray:
    """perm[i] is the index of -k for the mode k at index i."""
    return np.array([box.index[-k] for k in box.modes])


def random_state(box: BoxOperator2D, rng: np.random.Generator, symmetric: bool = True) -> StateVector:
    """Unit-variance complex Gaussian per mode, then made conjugate-symmetric."""
    n = box.dim
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    if symmetric:
        for i, k in enumerate(box.modes):
            if k.x < 0 or (k.x == 0 and k.y < 0):
                w[i] = np.conj(w[box.index[-k]])
    return StateVector(box.K, w)


def conjugate_defect(box_or_perm, w: np.ndarray) -> float:
    perm = box_or_perm if isinstance(box_or_perm, np.ndarray) else conjugate_map(box_or_perm)
    return float(np.max(np.abs(w[perm] - np.conj(w)))) if w.size else 0.0


def evolve(inst: ProblemInstance, K: int, omega0, t_final: float, dt: float,
           box: Optional[BoxOperator2D] = None, snapshot_every: int = 0,
           track_conjugacy: bool = False) -> Trajectory:
    """Classical RK4 for dw/dt = L w on the box, recording ||w(t)|| at every step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    box = box if box is not None else build_L2D(inst, K)
    norm = box_norm(box, inst.p)
    if dt * norm > STABILITY_LIMIT:
        raise StabilityError(dt, STABILITY_LIMIT / norm)
    A = box.matrix.tocsr()
    w = np.array(omega0.values if isinstance(omega0, StateVector) else omega0, dtype=complex)
    if w.shape != (box.dim,):
        raise ValueError(f"initial state has {w.size} entries, box has {box.dim} modes")
    steps = max(1, math.ceil(t_final / dt - 1e-9))
    h = t_final / steps
    times = np.linspace(0.0, t_final, steps + 1)
    norms = np.empty(steps + 1)
    norms[0] = np.linalg.norm(w)
    perm = conjugate_map(box) if track_conjugacy else None
    defect = conjugate_defect(perm, w) / max(norms[0], 1e-300) if track_conjugacy else 0.0
    snaps = [w.copy()] if snapshot_every else None
    for s in range(1, steps + 1):
        k1 = A @ w
        k2 = A @ (w + 0.5 * h * k1)
        k3 = A @ (w + 0.5 * h * k2)
        k4 = A @ (w + h * k3)
        w = w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norms[s] = np.linalg.norm(w)
        if track_conjugacy:
            defect = max(defect, conjugate_defect(perm, w) / max(norms[s], 1e-300))
        if snapshot_every and s % snapshot_every == 0:
            snaps.append(w.copy())
    return Trajectory(times, norms, w, snaps, defect)


def growth_rate(traj: Trajectory, fit_window: float = 0.5) -> float:
    """Least-squares slope of log ||w(t)|| over the last ``fit_window`` of the run."""
    if not 0 < fit_window <= 1:
        raise ValueError("fit_window must lie in (0, 1]")
    if np.any(traj.norms <= 0):
        raise ValueError("trajectory passes through the zero state; no growth rate")
    t0 = traj.times[-1] - fit_window * (traj.times[-1] - traj.times[0])
    sel = traj.times >= t0 - 1e-12
    if sel.sum() < 10:
        raise ValueError(f"fit window holds {int(sel.sum())} samples; need at least 10")
    slope, _ = np.polyfit(traj.times[sel], np.log(traj.norms[sel]), 1)
    return float(slope)


@dataclass
class MappingCheck:
    instance: ProblemInstance
    K: int
    dt: float
    t_final: float
    seed: int
    spectral_abscissa: float
    has_nonimaginary: bool
    rates: List[float]
    trajectories: List[Trajectory] = field(default_factory=list)

    def rate_ok(self, rate: float) -> bool:
        if not self.has_nonimaginary:
            return rate <= SUBEXPONENTIAL_RATE
        target = max(0.0, self.spectral_abscissa)
        return abs(rate - target) <= max(RELATIVE_RATE_TOL * abs(self.spectral_abscissa),
                                         SUBEXPONENTIAL_RATE)

    @property
    def ok(self) -> bool:
        return all(self.rate_ok(r) for r in self.rates)

    def to_dict(self, include_norms: bool = True) -> dict:
        trials = []
        for i, r in enumerate(self.rates):
            entry = {"trial": i, "rate": r, "ok": self.rate_ok(r)}
            if include_norms and i < len(self.trajectories):
                tr = self.trajectories[i]
                entry["times"] = [float(t) for t in tr.times]
                entry["norms"] = [float(n) for n in tr.norms]
            trials.append(entry)
        return {
            "schema": 1,
            "kind": "evolution",
            "instance": self.instance.to_dict(),
            "K": self.K,
            "dt": self.dt,
            "t_final": self.t_final,
            "seed": self.seed,
            "spectral_abscissa": self.spectral_abscissa,
            "has_nonimaginary": self.has_nonimaginary,
            "ok": self.ok,
            "trials": trials,
        }

    def csv_rows(self):
        rows = []
        for i, tr in enumerate(self.trajectories):
            rows.extend((i, float(t), float(n)) for t, n in zip(tr.times, tr.norms))
        return rows


def spectral_mapping_check(inst: ProblemInstance, K: int, trials: int = 3, t_final: float = 40.0,
                           dt: Optional[float] = None, seed: int = 0, fit_window: float = 0.5,
                           report: Optional[SpectrumReport] = None) -> MappingCheck:
    """Fit growth rates from seeded random starts and compare with max Re of the point spectrum."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    report = report if report is not None else nonimaginary_spectrum(inst)
    box = build_L2D(inst, K)
    norm = box_norm(box, inst.p)
    if dt is None:
        dt = STABILITY_LIMIT / norm if norm > 0 else t_final / 1000.0
        dt = min(dt, t_final / 200.0)
    seeds = np.random.SeedSequence(seed).spawn(trials)

    def run(ss):
        w0 = random_state(box, np.random.default_rng(ss))
        return evolve(inst, K, w0, t_final, dt, box=box)

    trajs = _pool_map(run, seeds)
    rates = [growth_rate(tr, fit_window) for tr in trajs]
    return MappingCheck(inst, K, dt, t_final, seed, report.max_real_part(),
                        bool(report.nonimaginary), rates, trajs)
