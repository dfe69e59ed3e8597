"""Time evolution: closed, Trotterized, and Lindblad with local environments.

Closed evolution goes through the Hermitian eigendecomposition. The split
two-interaction propagator alternates the two exponentials, which is how a
continuous mediated interaction is discretized into short two-body gates.
The master-equation integrator is fixed-step RK4 over the vectorized
generator; step grids are deterministic so that repeated runs are
bit-identical and golden tests stay meaningful.

hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    HERMITICITY_TOL,
    DensityMatrix,
    SystemDims,
    embed_local,
    hermitian_exp,
)

# Mid-run health thresholds for the integrator; beyond these the step size
# is too coarse and we abort rather than return garbage.
TRACE_DRIFT_ABORT = 1e-6
EIGENVALUE_ABORT = -1e-6
DEFAULT_STEPS = 2000


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus per-subsystem jump operators with rates.

    Each jump is a (subsystem label, operator on that subsystem, rate >= 0)
    triple. Operators act on a single labeled subsystem and are identity
    padded internally, so the locality of the environments is enforced by
    construction rather than checked at runtime.
    """

    hamiltonian: np.ndarray
    jumps: tuple[tuple[str, np.ndarray, float], ...]
    dims: SystemDims

    def __post_init__(self):
        h = np.array(self.hamiltonian, dtype=complex)
        if h.shape != (self.dims.total, self.dims.total):
            raise ValueError("hamiltonian dimension does not match dims")
        defect = float(np.max(np.abs(h - h.conj().T)))
        if defect > HERMITICITY_TOL:
            raise ValueError(f"hamiltonian not Hermitian: defect {defect:.3e}")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        cleaned = []
        for label, op, rate in self.jumps:
            rate = float(rate)
            if rate < 0:
                raise ValueError(f"negative rate {rate} on subsystem {label!r}")
            op = np.array(op, dtype=complex)
            d = self.dims.dim_of(label)  # raises on unknown label
            if op.shape != (d, d):
                raise ValueError(
                    f"jump operator on {label!r} has shape {op.shape}, "
                    f"subsystem dimension is {d}"
                )
            op.setflags(write=False)
            cleaned.append((str(label), op, rate))
        object.__setattr__(self, "jumps", tuple(cleaned))

    def embedded_jumps(self) -> list[np.ndarray]:
        """Full-space jump operators with the rate folded in as sqrt(rate)."""
        out = []
        for label, op, rate in self.jumps:
            if rate == 0.0:
                continue
            out.append(np.sqrt(rate) * embed_local(op, label, self.dims))
        return out


@dataclass(frozen=True)
class Trajectory:
    """Sampled states at strictly increasing times."""

    times: tuple[float, ...]
    states: tuple[DensityMatrix, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.states))

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]

    def nearest(self, t: float) -> DensityMatrix:
        """State at the sampled time closest to t."""
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.states[i]


def evolve_closed(rho0: DensityMatrix, h: np.ndarray, t: float) -> DensityMatrix:
    """U rho0 U^dag with U = exp(-i h t)."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (rho0.dim, rho0.dim):
        raise ValueError(
            f"hamiltonian shape {h.shape} does not match state dimension {rho0.dim}"
        )
    u = hermitian_exp(h, t)
    return DensityMatrix(u @ rho0.data @ u.conj().T, rho0.dims)


def trotter_evolve(
    rho0: DensityMatrix,
    h_ac: np.ndarray,
    h_bc: np.ndarray,
    t: float,
    n: int,
) -> DensityMatrix:
    """First-order split evolution (exp(-i h_bc dt) exp(-i h_ac dt))^n, dt = t/n.

    For commuting interaction terms this is exact at any n; otherwise the
    error decays as O(1/n), which the tests pin by step-doubling ratios.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    h_ac = np.asarray(h_ac, dtype=complex)
    h_bc = np.asarray(h_bc, dtype=complex)
    if h_ac.shape != (rho0.dim, rho0.dim) or h_bc.shape != (rho0.dim, rho0.dim):
        raise ValueError("hamiltonian shapes must match the state dimension")
    dt = t / n
    step = hermitian_exp(h_bc, dt) @ hermitian_exp(h_ac, dt)
    u = np.linalg.matrix_power(step, n)
    return DensityMatrix(u @ rho0.data @ u.conj().T, rho0.dims)


def _lindblad_rhs(rho: np.ndarray, h: np.ndarray, jumps: Sequence[np.ndarray]) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for q in jumps:
        qd = q.conj().T
        qdq = qd @ q
        out = out + q @ rho @ qd - 0.5 * (qdq @ rho + rho @ qdq)
    return out


def evolve_lindblad(
    rho0: DensityMatrix,
    model: LindbladModel,
    t_end: float,
    dt: float | None = None,
) -> Trajectory:
    """Integrate the master equation with fixed-step RK4, sampling every step.

    Parameters
    ----------
    rho0 : DensityMatrix
        Initial state; dims must match the model.
    model : LindbladModel
    t_end : float
        Final time, > 0.
    dt : float, optional
        Step size; defaults to t_end/2000. Must satisfy 0 < dt <= t_end.
        The last step is shortened so the grid ends exactly at t_end.

    Returns
    -------
    Trajectory
        States at 0, dt, 2 dt, ..., t_end.

    Raises
    ------
    RuntimeError
        If the trace drifts by more than 1e-6 or an eigenvalue falls below
        -1e-6 mid-run, with a suggestion to shrink dt.
    """
    if rho0.dims.dims != model.dims.dims:
        raise ValueError("state and model dimensions do not match")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if dt is None:
        dt = t_end / DEFAULT_STEPS
    if dt <= 0 or dt > t_end:
        raise ValueError("need 0 < dt <= t_end")

    h = model.hamiltonian
    jumps = model.embedded_jumps()
    qdq_list = [q.conj().T @ q for q in jumps]

    def rhs(m: np.ndarray) -> np.ndarray:
        out = -1j * (h @ m - m @ h)
        for q, qdq in zip(jumps, qdq_list):
            out = out + q @ m @ q.conj().T - 0.5 * (qdq @ m + m @ qdq)
        return out

    n_full = int(np.floor(t_end / dt + 1e-12))
    remainder = t_end - n_full * dt
    steps = [dt] * n_full + ([remainder] if remainder > 1e-12 * t_end else [])

    rho = np.array(rho0.data, dtype=complex)
    times = [0.0]
    states = [rho0]
    t = 0.0
    for step in steps:
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * step * k1)
        k3 = rhs(rho + 0.5 * step * k2)
        k4 = rhs(rho + step * k3)
        rho = rho + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)  # remove Hermiticity drift
        t += step

        drift = abs(np.real(rho.trace()) - 1.0)
        lo = float(np.linalg.eigvalsh(rho)[0])
        if drift > TRACE_DRIFT_ABORT or lo < EIGENVALUE_ABORT:
            raise RuntimeError(
                f"integrator left the state set at t={t:.6g}: "
                f"trace drift {drift:.3e}, min eigenvalue {lo:.3e}; "
                f"reduce dt (currently {step:.3e})"
            )
        try:
            sample = DensityMatrix(rho, rho0.dims)
        except ValueError as err:
            raise RuntimeError(
                f"sampled state invalid at t={t:.6g} ({err}); "
                f"reduce dt (currently {step:.3e})"
            ) from None
        times.append(t)
        states.append(sample)
    return Trajectory(tuple(times), tuple(states))
