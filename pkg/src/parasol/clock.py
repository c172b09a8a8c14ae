"""Time reparameterization between the semilinear and quasilinear problems.

The clock tau = alpha(t) = sigma + int_sigma^t a(l(u)) converts a solved
semilinear trajectory u(t) into w(tau) = u(alpha^-1(tau)), a discrete
solution of the quasilinear equation
w_tau - a(l(w)) w_xx = lambda f(w) + h(tau), and back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .problems import ProblemSpec
from .solver import Trajectory


@dataclass
class ClockMap:
    """Monotone cubic interpolants of the clock and its inverse."""

    t_grid: np.ndarray
    tau_grid: np.ndarray
    _forward: PchipInterpolator
    _inverse: PchipInterpolator

    def forward(self, t):
        return self._forward(t)

    def inverse(self, tau):
        return self._inverse(tau)


def build_clock(traj: Trajectory) -> ClockMap:
    """Clock map from the sampled pairs (t_i, alpha_i).

    Shape-preserving cubic interpolation keeps the strict monotonicity the
    inverse requires (slopes are bounded below by m > 0).
    """
    t, tau = traj.times, traj.alpha
    if np.any(np.diff(tau) <= 0):
        raise ValueError("clock samples are not strictly increasing")
    return ClockMap(
        t_grid=t.copy(),
        tau_grid=tau.copy(),
        _forward=PchipInterpolator(t, tau),
        _inverse=PchipInterpolator(tau, t),
    )


def _interp_rows(x_new: np.ndarray, x_old: np.ndarray, rows: np.ndarray) -> np.ndarray:
    out = np.empty((len(x_new), rows.shape[1]))
    for j in range(rows.shape[1]):
        out[:, j] = np.interp(x_new, x_old, rows[:, j])
    return out


def to_quasilinear(traj: Trajectory, n_tau: int | None = None) -> Trajectory:
    """Resample a semilinear trajectory onto a uniform tau grid.

    The result carries tau as its time variable; its own clock column is tau
    itself (the reparameterized problem runs in its native time).
    """
    cmap = build_clock(traj)
    n_tau = len(traj) if n_tau is None else n_tau
    tau = np.linspace(traj.alpha[0], traj.alpha[-1], n_tau)
    t_at = np.clip(cmap.inverse(tau), traj.times[0], traj.times[-1])
    W = _interp_rows(t_at, traj.times, traj.coeffs)
    return Trajectory(
        times=tau,
        coeffs=W,
        alpha=tau.copy(),
        basis=traj.basis,
        status=traj.status,
        method=traj.method,
        time_variable="tau",
        meta=dict(traj.meta),
    )


def quasilinear_residual(w_traj: Trajectory, spec: ProblemSpec) -> float:
    """Max interior L2 residual of the quasilinear equation in tau time,

        a(l(w))^2 w_tau = a(l(w)) w_xx + lambda f(w) + h(tau),

    with central differences in tau and spectral derivatives in x.  The tau
    clock advances at rate a(l(u)), so the time derivative carries the square
    of the diffusion coefficient as its metric factor; for unit a this is the
    plain quasilinear form.
    """
    basis = w_traj.basis
    mu = basis.eigenvalues
    tau = w_traj.times
    W = w_traj.coeffs
    dtau = np.diff(tau)
    if not np.allclose(dtau, dtau[0], rtol=1e-8):
        raise ValueError("residual needs a uniform tau grid")
    w_tau = (W[2:] - W[:-2]) / (tau[2:] - tau[:-2])[:, None]
    mid = W[1:-1]
    avals = np.asarray(spec.a(spec.l.of_matrix(mid, basis)), dtype=float)
    fvals = spec.f(basis.values_matrix(mid, padded=True))
    fc = basis.coeffs_from_values_matrix(fvals)
    hvals = np.asarray(spec.h(tau[1:-1]), dtype=float)
    res = (
        avals[:, None] ** 2 * w_tau
        + avals[:, None] * mu[None, :] * mid
        - spec.lam * fc
        - hvals[:, None] * basis._const_coeffs[None, :]
    )
    return float(np.sqrt(np.sum(res**2, axis=1)).max())


@dataclass
class RoundtripReport:
    max_error: float              # sup over nodes of the H^(1/2) roundtrip gap
    residual: float               # quasilinear residual of the tau trajectory
    clock_identity_error: float   # sup |alpha^-1(alpha(t)) - t| on the grid

    def to_dict(self):
        return {
            "max_error": self.max_error,
            "residual": self.residual,
            "clock_identity_error": self.clock_identity_error,
        }


def roundtrip_check(
    w0,
    spec: ProblemSpec,
    t_end: float,
    dt: float = 1e-3,
    method: str = "march",
) -> RoundtripReport:
    """Solve, map to tau time, map back through the inverse clock, and report
    the H^(1/2) gap together with the quasilinear residual."""
    from .solver import mild_solve

    traj = mild_solve(w0, spec, t_end, method=method, dt=dt)
    cmap = build_clock(traj)
    w_traj = to_quasilinear(traj)
    tau_at = np.clip(cmap.forward(traj.times), w_traj.times[0], w_traj.times[-1])
    U_rt = _interp_rows(tau_at, w_traj.times, w_traj.coeffs)
    mu = traj.basis.eigenvalues
    gap = float(np.sqrt(np.sum(mu * (U_rt - traj.coeffs) ** 2, axis=1)).max())
    ident = float(np.max(np.abs(cmap.inverse(cmap.forward(traj.times)) - traj.times)))
    return RoundtripReport(
        max_error=gap,
        residual=quasilinear_residual(w_traj, spec),
        clock_identity_error=ident,
    )
