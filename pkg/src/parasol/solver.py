"""Mild-solution construction for the semilinear nonlocal problem.

The trajectory u solves, in integral form,

    u(t) = T(t - sigma) w0 + int_sigma^t T(t - s) g(s, u(s), alpha(s)) ds,

where g = [lambda f(u) + h(alpha)] / a(l(u)) and alpha is the running clock
sigma + int a(l(u)).  Two routes are provided: a certified fixed-point
iteration on short windows (with continuation), and a first-order
exponential integrator for long marches.  Both act diagonally on the sine
coefficients with exact semigroup factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import Basis, SpectralField, operator_constants
from .errors import EnsembleBlowUpError, NonConvergenceError
from .problems import ProblemSpec, embedding_constant

BLOWUP_THRESHOLD = 1e8


@dataclass
class Trajectory:
    """Solver output: time grid, coefficient rows, and the accumulated clock."""

    times: np.ndarray
    coeffs: np.ndarray
    alpha: np.ndarray
    basis: Basis
    status: str = "completed"          # completed | blown_up | max_time_reached
    method: str = "march"
    blowup_time: float | None = None
    time_variable: str = "t"
    meta: dict = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> SpectralField:
        return SpectralField(self.coeffs[i].copy(), self.basis)

    @property
    def initial_state(self) -> SpectralField:
        return self.state(0)

    @property
    def final_state(self) -> SpectralField:
        return self.state(-1)

    def norms(self, alpha_frac: float = 0.0) -> np.ndarray:
        w = self.basis.eigenvalues ** (2.0 * alpha_frac) if alpha_frac else 1.0
        return np.sqrt(np.sum(w * self.coeffs**2, axis=1))

    def values_matrix(self) -> np.ndarray:
        return self.basis.values_matrix(self.coeffs)

    def clock_slopes(self) -> np.ndarray:
        return np.diff(self.alpha) / np.diff(self.times)


@dataclass(frozen=True)
class LocalExistenceCert:
    """Existence window certificate for one initial state.

    T1 = min(a_window, rho / (2 M_alpha N_a)), where a_window satisfies both
    the semigroup-continuity condition sup_{t<=a} ||T(t)w0 - w0||_(1/2) <= rho/2
    and the quadrature condition
    N_a M_alpha int_0^a s^(-1/2) e^(-omega s) ds <= rho/2, and M_alpha is the
    smoothing constant certified on (0, a_window].
    """

    rho: float
    N_a: float
    T1: float
    M_alpha: float
    omega: float
    a_window: float

    def to_dict(self):
        return {
            "rho": self.rho, "N_a": self.N_a, "T1": self.T1,
            "M_alpha": self.M_alpha, "omega": self.omega, "a_window": self.a_window,
        }


# -- forcing -----------------------------------------------------------------


def _g_matrix(coeffs: np.ndarray, alphas: np.ndarray, spec: ProblemSpec, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """g for each row of ``coeffs``; returns (g coefficients, a values)."""
    lvals = spec.l.of_matrix(coeffs, basis)
    avals = np.asarray(spec.a(lvals), dtype=float)
    vals = basis.values_matrix(coeffs, padded=True)
    fc = basis.coeffs_from_values_matrix(spec.f(vals))
    hvals = np.asarray(spec.h(alphas), dtype=float)
    g = (spec.lam * fc + hvals[:, None] * basis._const_coeffs[None, :]) / avals[:, None]
    return g, avals


def forcing_g(t: float, u: SpectralField, alpha_t: float, spec: ProblemSpec) -> SpectralField:
    """Nonlocal forcing [lambda f(u) + h(alpha_t)] / a(l(u)) as a field.

    f acts pointwise on the padded collocation values (3/2-rule dealiasing);
    the h term enters through the constant's truncated sine expansion.
    """
    g, _ = _g_matrix(u.coeffs[None, :], np.array([alpha_t]), spec, u.basis)
    return SpectralField(g[0], u.basis)


# -- certificates ------------------------------------------------------------


def local_existence_certificate(
    w0: SpectralField,
    spec: ProblemSpec,
    rho: float,
    a_max: float = 1.0,
) -> LocalExistenceCert:
    """Certify an existence window for the ball of radius rho around w0.

    The forcing bound is analytic: with r_inf = 2**-0.5 (||w0||_(1/2) + rho)
    dominating every sup-norm in the ball,
    N_a = [lambda sup_{|s|<=r_inf} |f(s)| + K] / m.
    The window a is found by bisection on the two monotone conditions.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    basis = w0.basis
    mu = basis.eigenvalues
    r_inf = embedding_constant() * (w0.norm(0.5) + rho)
    N_a = (spec.lam * spec.f.sup_abs(r_inf) + spec.K) / spec.m

    w = mu * w0.coeffs**2

    def continuity_gap(a):
        # ||T(a)w0 - w0||_(1/2) is increasing in a
        return float(np.sqrt(np.sum(w * (1.0 - np.exp(-mu * a)) ** 2)))

    def quad_value(a):
        M_a, omega = operator_constants(0.5, basis.n_modes, t_window=a)
        s = np.linspace(0.0, a, 4001)[1:]
        integral = float(np.trapezoid(s**-0.5 * np.exp(-omega * s), s)) + 2.0 * np.sqrt(s[0])
        return N_a * M_a * integral

    def admissible(a):
        return continuity_gap(a) <= rho / 2 and quad_value(a) <= rho / 2

    if admissible(a_max):
        a_win = a_max
    else:
        lo, hi = 0.0, a_max
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if admissible(mid):
                lo = mid
            else:
                hi = mid
        a_win = lo
    if a_win <= 0:
        raise ValueError("no admissible window; rho too small for this state")

    M_alpha, omega = operator_constants(0.5, basis.n_modes, t_window=a_win)
    T1 = a_win if N_a == 0 else min(a_win, rho / (2.0 * M_alpha * N_a))
    return LocalExistenceCert(rho=rho, N_a=N_a, T1=T1, M_alpha=M_alpha, omega=omega, a_window=a_win)


# -- quadrature weights -------------------------------------------------------


def _exp_trapezoid_weights(mu: np.ndarray, dt: float):
    """Per-mode weights (E, w_left, w_right) so that

        int_0^dt e^{-mu (dt - s)} [G0 (1 - s/dt) + G1 s/dt] ds
            = w_left G0 + w_right G1,

    exact for forcing linear in time on the step.  E = exp(-mu dt).
    """
    x = mu * dt
    E = np.exp(-x)
    phi1 = -np.expm1(-x) / mu
    w_left = (-np.expm1(-x) - x * E) / (mu**2 * dt)
    w_right = phi1 - w_left
    return E, w_left, w_right


# -- fixed-point solver -------------------------------------------------------


def picard_solve(
    w0: SpectralField,
    spec: ProblemSpec,
    cert: LocalExistenceCert,
    n_steps: int = 32,
    tol: float = 1e-9,
    sigma: float | None = None,
    alpha0: float | None = None,
    horizon: float | None = None,
    max_sweeps: int = 200,
) -> Trajectory:
    """Iterate the variation-of-constants map to a fixed point on [sigma, sigma+T1].

    The iteration space is the discrete trajectory on n_steps uniform
    intervals; convolution integrals use the exponentially weighted trapezoid
    with exact per-mode factors, and the clock is recomputed from the current
    iterate each sweep.  Stops when the sup-over-nodes H^(1/2) increment
    falls below tol; raises NonConvergenceError after max_sweeps (the caller
    should halve the horizon and retry).
    """
    if n_steps < 8:
        raise ValueError("n_steps must be at least 8")
    if tol <= 0:
        raise ValueError("tol must be positive")
    basis = w0.basis
    mu = basis.eigenvalues
    sigma = spec.sigma if sigma is None else sigma
    alpha0 = sigma if alpha0 is None else alpha0
    T1 = cert.T1 if horizon is None else min(horizon, cert.T1)
    if T1 <= 0:
        raise ValueError("empty solve window")

    dt = T1 / n_steps
    t_local = np.linspace(0.0, T1, n_steps + 1)
    E, w_left, w_right = _exp_trapezoid_weights(mu, dt)
    hom = np.exp(-np.outer(t_local, mu)) * w0.coeffs[None, :]

    U = hom.copy()
    h1w = mu

    def clock(states):
        avals = np.asarray(spec.a(spec.l.of_matrix(states, basis)), dtype=float)
        increments = 0.5 * (avals[1:] + avals[:-1]) * dt
        return alpha0 + np.concatenate([[0.0], np.cumsum(increments)])

    converged = False
    for _ in range(max_sweeps):
        alphas = clock(U)
        G, _ = _g_matrix(U, alphas, spec, basis)
        U_new = hom.copy()
        Q = np.zeros(basis.n_modes)
        for i in range(n_steps):
            Q = E * Q + w_left * G[i] + w_right * G[i + 1]
            U_new[i + 1] += Q
        diff = float(np.sqrt(np.max(np.sum(h1w * (U_new - U) ** 2, axis=1))))
        U = U_new
        if diff < tol:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"no fixed point in {max_sweeps} sweeps on window {T1:g}; halve T1 and retry"
        )

    alphas = clock(U)
    return Trajectory(
        times=sigma + t_local,
        coeffs=U,
        alpha=alphas,
        basis=basis,
        status="completed",
        method="picard",
        meta={"n_steps": n_steps, "tol": tol, "rho": cert.rho},
    )


def trajectory_defect(traj: Trajectory, spec: ProblemSpec) -> float:
    """Max H^(1/2) defect of the variation-of-constants identity on the
    trajectory's own grid (the fixed-point residual for a converged solve)."""
    basis = traj.basis
    mu = basis.eigenvalues
    G, _ = _g_matrix(traj.coeffs, traj.alpha, spec, basis)
    t_rel = traj.times - traj.times[0]
    hom = np.exp(-np.outer(t_rel, mu)) * traj.coeffs[0][None, :]
    recon = hom.copy()
    Q = np.zeros(basis.n_modes)
    worst = 0.0
    for i in range(len(traj) - 1):
        dt = traj.times[i + 1] - traj.times[i]
        E, w_left, w_right = _exp_trapezoid_weights(mu, dt)
        Q = E * Q + w_left * G[i] + w_right * G[i + 1]
        recon[i + 1] += Q
        d = float(np.sqrt(np.sum(mu * (recon[i + 1] - traj.coeffs[i + 1]) ** 2)))
        worst = max(worst, d)
    return worst


# -- exponential marching ------------------------------------------------------


def march(
    w0: SpectralField,
    spec: ProblemSpec,
    t_end: float,
    dt: float = 1e-3,
    sigma: float | None = None,
    alpha0: float | None = None,
    blowup_threshold: float = BLOWUP_THRESHOLD,
    store_every: int = 1,
    max_steps: int | None = None,
) -> Trajectory:
    """First-order exponential integrator
    u_{n+1} = T(dt) u_n + A^{-1}(I - T(dt)) g(t_n, u_n, alpha_n),
    exact whenever g is constant in time and state.

    Blow-up (H^(1/2) norm beyond the threshold) is recorded in the status,
    not raised.  The clock advances by the trapezoid of a(l(u)).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    sigma = spec.sigma if sigma is None else sigma
    if t_end <= sigma:
        raise ValueError("t_end must exceed the initial time")
    alpha0 = sigma if alpha0 is None else alpha0
    basis = w0.basis
    mu = basis.eigenvalues
    E = np.exp(-mu * dt)
    Q = (1.0 - E) / mu

    span = t_end - sigma
    n_full = int(np.floor(span / dt + 1e-9))
    remainder = span - n_full * dt
    has_partial = remainder > 1e-12 * dt

    u = w0.coeffs.copy()
    alpha = float(alpha0)
    t = float(sigma)
    lval = spec.l(SpectralField(u, basis))
    a_here = float(spec.a(lval))

    times = [t]
    rows = [u.copy()]
    alphas = [alpha]
    status = "completed"
    blowup_time = None
    total_steps = n_full + (1 if has_partial else 0)

    for i in range(total_steps):
        if max_steps is not None and i >= max_steps:
            status = "max_time_reached"
            break
        if i < n_full:
            step, Es, Qs = dt, E, Q
        else:
            step = remainder
            Es = np.exp(-mu * step)
            Qs = (1.0 - Es) / mu
        g, _ = _g_matrix(u[None, :], np.array([alpha]), spec, basis)
        u = Es * u + Qs * g[0]
        a_next = float(spec.a(spec.l(SpectralField(u, basis))))
        alpha = alpha + step * 0.5 * (a_here + a_next)
        a_here = a_next
        t = t + step
        keep = (i + 1) % store_every == 0 or i == total_steps - 1
        if keep:
            times.append(t)
            rows.append(u.copy())
            alphas.append(alpha)
        h_half = float(np.sqrt(np.sum(mu * u**2)))
        if not np.isfinite(h_half) or h_half > blowup_threshold:
            status = "blown_up"
            blowup_time = t
            if not keep:
                times.append(t)
                rows.append(u.copy())
                alphas.append(alpha)
            break

    return Trajectory(
        times=np.array(times),
        coeffs=np.array(rows),
        alpha=np.array(alphas),
        basis=basis,
        status=status,
        method="march",
        blowup_time=blowup_time,
        meta={
            "dt": dt,
            "blowup_threshold": blowup_threshold,
            "store_every": store_every,
        },
    )


def march_ensemble(
    coeffs0: np.ndarray,
    spec: ProblemSpec,
    basis: Basis,
    sigma: float,
    t_end: float,
    dt: float = 1e-3,
    alpha0: float | None = None,
    blowup_threshold: float = BLOWUP_THRESHOLD,
    check_every: int = 50,
    h_time: str = "clock",
) -> tuple[np.ndarray, np.ndarray]:
    """Evolve an ensemble (rows of ``coeffs0``) in lockstep; returns the final
    coefficient rows and per-member clock values.

    Members never exchange state; each row carries its own clock.  Any member
    crossing the blow-up threshold aborts the sweep with diagnostics, since a
    certified problem must not blow up.

    ``h_time`` selects the argument of the time forcing: ``"clock"`` feeds it
    the member's accumulated clock (the single-trajectory convention), while
    ``"plain"`` feeds it the unreparameterized time, which keeps the forcing
    phase at a fixed target time independent of the starting time.  Ensembles
    launched from receding starting times need the latter for their target
    states to be comparable.
    """
    if h_time not in ("clock", "plain"):
        raise ValueError("h_time must be 'clock' or 'plain'")
    U = np.array(coeffs0, dtype=float)
    mu = basis.eigenvalues
    alphas = np.full(U.shape[0], sigma if alpha0 is None else alpha0, dtype=float)
    span = t_end - sigma
    n_full = int(np.floor(span / dt + 1e-9))
    remainder = span - n_full * dt
    steps = [(dt, n_full)] + ([(remainder, 1)] if remainder > 1e-12 * dt else [])

    lvals = spec.l.of_matrix(U, basis)
    a_here = np.asarray(spec.a(lvals), dtype=float)
    counter = 0
    t_now = sigma
    ones = np.ones(U.shape[0])
    for step, reps in steps:
        E = np.exp(-mu * step)
        Q = (1.0 - E) / mu
        for _ in range(reps):
            h_args = alphas if h_time == "clock" else t_now * ones
            G, _ = _g_matrix(U, h_args, spec, basis)
            U = E[None, :] * U + Q[None, :] * G
            a_next = np.asarray(spec.a(spec.l.of_matrix(U, basis)), dtype=float)
            alphas = alphas + step * 0.5 * (a_here + a_next)
            a_here = a_next
            t_now += step
            counter += 1
            if counter % check_every == 0:
                h = np.sqrt(np.sum(mu * U**2, axis=1))
                if not np.all(np.isfinite(h)) or np.max(h) > blowup_threshold:
                    member = int(np.argmax(np.where(np.isfinite(h), h, np.inf)))
                    raise EnsembleBlowUpError(
                        "ensemble member blew up; certificate contradicted",
                        diagnostics={"member": member, "t": t_now},
                    )
    return U, alphas


# -- continuation and the one-call driver --------------------------------------


def _concat(a: Trajectory, b: Trajectory) -> Trajectory:
    out = Trajectory(
        times=np.concatenate([a.times, b.times[1:]]),
        coeffs=np.concatenate([a.coeffs, b.coeffs[1:]]),
        alpha=np.concatenate([a.alpha, b.alpha[1:]]),
        basis=a.basis,
        status=b.status,
        method=a.method,
        blowup_time=b.blowup_time,
        meta=dict(a.meta),
    )
    return out


def continue_solution(
    traj: Trajectory,
    spec: ProblemSpec,
    t_end: float,
    max_segments: int = 20000,
) -> Trajectory:
    """Extend a trajectory to t_end, re-issuing certificates at the endpoint
    for fixed-point runs or stepping on for marches.  Blow-up propagates."""
    if traj.status == "blown_up":
        return traj
    if t_end <= traj.times[-1]:
        return traj
    if traj.method == "march":
        tail = march(
            traj.final_state, spec, t_end,
            dt=traj.meta["dt"],
            sigma=float(traj.times[-1]),
            alpha0=float(traj.alpha[-1]),
            blowup_threshold=traj.meta.get("blowup_threshold", BLOWUP_THRESHOLD),
            store_every=traj.meta.get("store_every", 1),
        )
        return _concat(traj, tail)

    n_steps = traj.meta.get("n_steps", 32)
    tol = traj.meta.get("tol", 1e-9)
    rho = traj.meta.get("rho", 1.0)
    out = traj
    for _ in range(max_segments):
        t_here = float(out.times[-1])
        if t_here >= t_end - 1e-12:
            return out
        state = out.final_state
        cert = local_existence_certificate(state, spec, rho)
        horizon = min(cert.T1, t_end - t_here)
        seg = None
        for _ in range(40):
            try:
                seg = picard_solve(
                    state, spec, cert, n_steps=n_steps, tol=tol,
                    sigma=t_here, alpha0=float(out.alpha[-1]), horizon=horizon,
                )
                break
            except NonConvergenceError:
                horizon /= 2.0
        if seg is None:
            raise NonConvergenceError("window halving exhausted during continuation")
        out = _concat(out, seg)
        if np.sqrt(np.sum(out.basis.eigenvalues * seg.coeffs[-1] ** 2)) > BLOWUP_THRESHOLD:
            out.status = "blown_up"
            out.blowup_time = float(out.times[-1])
            return out
    out.status = "max_time_reached"
    return out


def mild_solve(
    w0: SpectralField,
    spec: ProblemSpec,
    t_end: float,
    method: str = "march",
    dt: float = 1e-3,
    n_steps: int = 32,
    tol: float = 1e-9,
    rho: float = 1.0,
    store_every: int = 1,
) -> Trajectory:
    """Solve from w0 to t_end by the requested route."""
    if method == "march":
        return march(w0, spec, t_end, dt=dt, store_every=store_every)
    if method == "picard":
        cert = local_existence_certificate(w0, spec, rho)
        first = picard_solve(
            w0, spec, cert, n_steps=n_steps, tol=tol,
            horizon=min(cert.T1, t_end - spec.sigma),
        )
        return continue_solution(first, spec, t_end)
    raise ValueError(f"unknown method {method!r}")


# -- regularity probe ----------------------------------------------------------


def holder_probe(traj: Trajectory, beta: float, fit_window: float = 0.1, max_nodes: int = 400) -> float:
    """Fitted constant C in ||u(t+h) - u(t)||_(1/2) <= C t^-beta h^beta.

    Scans node pairs with t beyond fit_window of the span and reports the
    largest ratio ||difference|| * t^beta * h^-beta.
    """
    if not 0.0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    if len(traj) < 32:
        raise ValueError("trajectory too short to probe")
    t_rel = traj.times - traj.times[0]
    span = t_rel[-1]
    idx = np.nonzero(t_rel >= fit_window * span)[0]
    if len(idx) > max_nodes:
        idx = idx[np.linspace(0, len(idx) - 1, max_nodes).astype(int)]
    mu = traj.basis.eigenvalues
    C = 0.0
    for pos, i in enumerate(idx[:-1]):
        js = idx[pos + 1:]
        diffs = traj.coeffs[js] - traj.coeffs[i][None, :]
        norms = np.sqrt(np.sum(mu * diffs**2, axis=1))
        hs = t_rel[js] - t_rel[i]
        ratios = norms * t_rel[i] ** beta * hs ** (-beta)
        C = max(C, float(ratios.max()))
    return C
