"""Order-theoretic machinery: autonomous bounding problems, monotone
iteration, ordered-run audits, positivity, and the pointwise barrier.

Solutions are compared node-wise at the collocation points.  Spectral
truncation does not preserve pointwise order exactly, so every audit carries
an explicit tolerance tied to the truncation scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import SpectralField
from .errors import OrderViolationError
from .problems import (
    Diffusion,
    Forcing,
    ProblemSpec,
    Reaction,
    StructuralCertificate,
    monotonicity_shift,
    phi_closed_form,
)
from .solver import Trajectory, _exp_trapezoid_weights, _g_matrix, march


def sandwich_specs(spec: ProblemSpec, swapped: bool = False) -> tuple[ProblemSpec, ProblemSpec]:
    """Autonomous problems bounding the nonlocal one from below and above.

    The bounds divide lambda f(u) -/+ K by whichever of m, M keeps them on
    the correct side of every realizable (lambda f(u) + h)/a: the numerator's
    sign selects the divisor.  Where lambda f - K >= 0 the lower bound is the
    familiar (lambda f - K)/M; dividing a negative numerator by M instead
    would land above realizable forcings (at u = 0, h = -K, a = m already).
    ``swapped`` deliberately exchanges the divisors, producing invalid bounds
    for negative-control experiments.
    """
    base = spec.f.to_dict()
    common = dict(lam=spec.lam, K=spec.K, m=spec.m, M=spec.M, swapped=swapped)
    lower = ProblemSpec(
        lam=1.0,
        f=Reaction("envelope", {"base": base, "side": -1.0, **common}),
        a=Diffusion("constant", {"value": 1.0}),
        l=spec.l,
        h=Forcing("zero"),
        sigma=spec.sigma,
    )
    upper = ProblemSpec(
        lam=1.0,
        f=Reaction("envelope", {"base": base, "side": +1.0, **common}),
        a=Diffusion("constant", {"value": 1.0}),
        l=spec.l,
        h=Forcing("zero"),
        sigma=spec.sigma,
    )
    return lower, upper


@dataclass
class SandwichScan:
    """Direct value-grid audit of lower <= (lambda f + h)/a <= upper and of
    monotonicity of the gamma-shifted bounds."""

    max_violation: float
    violation_count: int
    monotone_ok: bool
    gamma: float
    radius: float

    @property
    def passed(self) -> bool:
        return self.violation_count == 0 and self.monotone_ok

    def to_dict(self):
        return {
            "max_violation": self.max_violation,
            "violation_count": self.violation_count,
            "monotone_ok": self.monotone_ok,
            "gamma": self.gamma,
            "radius": self.radius,
        }


def sandwich_scan(
    spec: ProblemSpec,
    radius: float,
    gamma: float | None = None,
    n_u: int = 4001,
    n_env: int = 21,
) -> SandwichScan:
    """Scan the bounding chain over u in [-radius, radius], a over [m, M],
    and h over [-K, K].  No simulation involved."""
    lower, upper = sandwich_specs(spec)
    if gamma is None:
        gamma = spec.lam / spec.m * monotonicity_shift(spec.f, radius)
    u = np.linspace(-radius, radius, n_u)
    lo = lower.f(u)
    hi = upper.f(u)
    worst = np.inf
    count = 0
    for a_val in np.linspace(spec.m, spec.M, n_env):
        for h_val in np.linspace(-spec.K, spec.K, n_env):
            mid = (spec.lam * spec.f(u) + h_val) / a_val
            margins = np.minimum(mid - lo, hi - mid)
            worst = min(worst, float(margins.min()))
            count += int(np.count_nonzero(margins < -1e-12))
    shifted_lo = gamma * u + lo
    shifted_hi = gamma * u + hi
    monotone_ok = bool(np.all(np.diff(shifted_lo) >= -1e-12) and np.all(np.diff(shifted_hi) >= -1e-12))
    return SandwichScan(
        max_violation=-worst if worst < 0 else 0.0,
        violation_count=count,
        monotone_ok=monotone_ok,
        gamma=float(gamma),
        radius=radius,
    )


# -- monotone iteration --------------------------------------------------------


def shifted_fixed_point(
    w0: SpectralField,
    spec: ProblemSpec,
    k: float,
    t_end: float,
    n_steps: int = 256,
    tol: float = 1e-10,
    max_sweeps: int = 400,
) -> Trajectory:
    """Fixed point of the k-shifted variation-of-constants map for an
    autonomous problem; reference generator for the monotone iteration."""
    _require_autonomous(spec)
    basis = w0.basis
    t = np.linspace(spec.sigma, t_end, n_steps + 1)
    U = np.exp(-np.outer(t - spec.sigma, basis.eigenvalues + k)) * w0.coeffs[None, :]
    for _ in range(max_sweeps):
        U_new = _shifted_sweep(w0.coeffs, U, t, spec, k, basis)
        diff = float(np.sqrt(np.max(np.sum(basis.eigenvalues * (U_new - U) ** 2, axis=1))))
        U = U_new
        if diff < tol:
            break
    else:
        raise OrderViolationError("shifted fixed point failed to converge; horizon too long")
    return Trajectory(
        times=t, coeffs=U, alpha=t.copy(), basis=basis,
        status="completed", method="picard", meta={"k": k, "tol": tol},
    )


def _require_autonomous(spec: ProblemSpec):
    if spec.h.kind != "zero" or spec.a.m != spec.a.M:
        raise ValueError("monotone iteration requires an autonomous problem (h = 0, constant a)")


def _shifted_sweep(w0_coeffs, U, times, spec, k, basis):
    """One application of u -> T_k(t) w0 + int T_k(t-s)[g(u) + k u] ds."""
    mu_k = basis.eigenvalues + k
    G, _ = _g_matrix(U, times, spec, basis)
    G = G + k * U
    out = np.exp(-np.outer(times - times[0], mu_k)) * w0_coeffs[None, :]
    Q = np.zeros(basis.n_modes)
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        E, w_left, w_right = _exp_trapezoid_weights(mu_k, dt)
        Q = E * Q + w_left * G[i] + w_right * G[i + 1]
        out[i + 1] += Q
    return out


def monotone_iterate(
    u_minus: SpectralField,
    reference: Trajectory,
    spec: ProblemSpec,
    k: float,
    max_sweeps: int = 100,
    tol: float = 1e-8,
    order_tol: float | None = None,
) -> Trajectory:
    """Monotone sequence u_{n+1} = F_{u-}(u_n) seeded by a reference solution.

    F is the k-shifted variation-of-constants map anchored at u_minus; with
    g + k id increasing, the iterates decrease node-wise from the reference
    and converge to an ordered solution below it.  A node-wise increase
    beyond order_tol raises OrderViolationError (double k and retry).
    """
    _require_autonomous(spec)
    basis = reference.basis
    if u_minus.basis != basis:
        raise ValueError("fields from different bases never combine")
    ref_vals = basis.values_matrix(reference.coeffs)
    w0_vals = basis.values_matrix(u_minus.coeffs)[0]
    if np.any(w0_vals > ref_vals[0] + 1e-10):
        raise ValueError("u_minus must sit below the reference initially")
    if order_tol is None:
        order_tol = 1e-6 * max(1.0, float(np.abs(ref_vals).max()))

    U = reference.coeffs.copy()
    prev_vals = ref_vals
    for _ in range(max_sweeps):
        U_new = _shifted_sweep(u_minus.coeffs, U, reference.times, spec, k, basis)
        new_vals = basis.values_matrix(U_new)
        rise = float((new_vals - prev_vals).max())
        if rise > order_tol:
            raise OrderViolationError(
                f"iterate rose by {rise:.3e} (> {order_tol:.1e}); shift k too small"
            )
        diff = float(np.sqrt(np.max(np.sum(basis.eigenvalues * (U_new - U) ** 2, axis=1))))
        U = U_new
        prev_vals = new_vals
        if diff < tol:
            break
    return Trajectory(
        times=reference.times.copy(), coeffs=U, alpha=reference.alpha.copy(),
        basis=basis, status="completed", method="picard",
        meta={"k": k, "tol": tol, "seeded": True},
    )


# -- ordered-run audits ----------------------------------------------------------


@dataclass
class ComparisonReport:
    """Node-wise ordering audit of a lower / middle / upper run triple."""

    runs: dict = dc_field(repr=False, default_factory=dict)
    max_violation: float = 0.0       # most negative of (middle-lower, upper-middle)
    violation_count: int = 0
    tolerance: float = 1e-6

    @property
    def passed(self) -> bool:
        return self.max_violation >= -self.tolerance

    def to_dict(self):
        return {
            "max_violation": self.max_violation,
            "violation_count": self.violation_count,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "statuses": {k: v.status for k, v in self.runs.items()},
        }


def compare_ordered(
    spec: ProblemSpec,
    w0_low: SpectralField,
    w0_mid: SpectralField,
    w0_high: SpectralField,
    t_end: float,
    dt: float = 1e-3,
    tolerance: float = 1e-6,
    store_every: int = 10,
    swapped: bool = False,
) -> ComparisonReport:
    """Run the lower bound from w0_low, the nonlocal problem from w0_mid and
    the upper bound from w0_high, and audit the node-wise ordering at every
    stored time."""
    basis = w0_mid.basis
    vl, vm, vh = (w.values() for w in (w0_low, w0_mid, w0_high))
    if np.any(vl > vm + 1e-12) or np.any(vm > vh + 1e-12):
        raise ValueError("initial data must be node-wise ordered")
    lower_spec, upper_spec = sandwich_specs(spec, swapped=swapped)
    low = march(w0_low, lower_spec, t_end, dt=dt, store_every=store_every)
    mid = march(w0_mid, spec, t_end, dt=dt, store_every=store_every)
    high = march(w0_high, upper_spec, t_end, dt=dt, store_every=store_every)
    n = min(len(low), len(mid), len(high))
    Vl = basis.values_matrix(low.coeffs[:n])
    Vm = basis.values_matrix(mid.coeffs[:n])
    Vh = basis.values_matrix(high.coeffs[:n])
    margins = np.minimum(Vm - Vl, Vh - Vm)
    return ComparisonReport(
        runs={"lower": low, "middle": mid, "upper": high},
        max_violation=float(margins.min()),
        violation_count=int(np.count_nonzero(margins < -tolerance)),
        tolerance=tolerance,
    )


@dataclass
class PositivityReport:
    min_value: float
    tolerance: float
    status: str

    @property
    def passed(self) -> bool:
        return self.min_value >= -self.tolerance

    def to_dict(self):
        return {"min_value": self.min_value, "tolerance": self.tolerance,
                "status": self.status, "passed": self.passed}


def positivity_check(
    spec: ProblemSpec,
    w0: SpectralField,
    t_end: float,
    dt: float = 1e-3,
    tolerance: float = 1e-6,
    store_every: int = 10,
) -> PositivityReport:
    """Audit that a run from nonnegative data stays node-wise nonnegative."""
    if np.any(w0.values() < -1e-12):
        raise ValueError("w0 must be node-wise nonnegative")
    traj = march(w0, spec, t_end, dt=dt, store_every=store_every)
    vals = traj.values_matrix()
    return PositivityReport(
        min_value=float(vals.min()), tolerance=tolerance, status=traj.status,
    )


@dataclass
class BarrierReport:
    max_excess_phi: float        # max over nodes/times of |u| - phi
    max_excess_majorant: float   # max over nodes/times of |u| - w+
    tolerance: float
    status: str
    phi_sup: float

    @property
    def passed(self) -> bool:
        return max(self.max_excess_phi, self.max_excess_majorant) <= self.tolerance

    def to_dict(self):
        return {
            "max_excess_phi": self.max_excess_phi,
            "max_excess_majorant": self.max_excess_majorant,
            "tolerance": self.tolerance,
            "status": self.status,
            "phi_sup": self.phi_sup,
            "passed": self.passed,
        }


def barrier_check(
    spec: ProblemSpec,
    cert: StructuralCertificate,
    w0: SpectralField,
    t_end: float,
    dt: float = 1e-3,
    tolerance: float = 1e-6,
    store_every: int = 10,
) -> BarrierReport:
    """Audit |u(t, x)| <= phi(x) at the nodes along a run, and also against
    the linear majorant w+ solving w_t + A w = -c w + C1 from |w0|,
    where c = nu C0 comes from the certificate."""
    if not cert.satisfied_D:
        raise ValueError("barrier check needs a certificate with lambda1 > 0")
    basis = w0.basis
    c = cert.nu * cert.C0
    phi = phi_closed_form(c, cert.C1)
    phi_nodes = phi(basis.collocation_nodes)
    w0_vals = w0.values()
    if np.any(np.abs(w0_vals) > phi_nodes + 1e-9):
        raise ValueError("|w0| must sit below phi at the nodes")

    traj = march(w0, spec, t_end, dt=dt, store_every=store_every)
    vals = np.abs(traj.values_matrix())
    excess_phi = float((vals - phi_nodes[None, :]).max())

    # exact diagonal solution of the shifted affine majorant on the same grid
    mu_c = basis.eigenvalues + c
    c1_coeffs = cert.C1 * basis._const_coeffs
    w_plus = basis.from_values(np.abs(w0_vals)).coeffs
    excess_major = float((vals[0] - basis.values_matrix(w_plus)[0]).max())
    for i in range(1, len(traj)):
        step = traj.times[i] - traj.times[i - 1]
        decay = np.exp(-mu_c * step)
        w_plus = decay * w_plus + (1.0 - decay) / mu_c * c1_coeffs
        gap = vals[i] - basis.values_matrix(w_plus)[0]
        excess_major = max(excess_major, float(gap.max()))

    x_fine = np.linspace(0.0, 1.0, 10001)
    return BarrierReport(
        max_excess_phi=excess_phi,
        max_excess_majorant=excess_major,
        tolerance=tolerance,
        status=traj.status,
        phi_sup=float(phi(x_fine).max()),
    )
