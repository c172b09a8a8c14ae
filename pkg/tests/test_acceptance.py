"""Acceptance suite: one test per release criterion, each printing a
PASS line with the measured quantity (run with -s to see them)."""

import json
import math
import time

import numpy as np
import pytest

from parasol import (
    Basis,
    Diffusion,
    Forcing,
    ProblemSpec,
    Reaction,
    SpatialFunctional,
    certify_spec,
    check_modulus,
    check_structural,
    compare_ordered,
    continue_solution,
    default_spec,
    holder_probe,
    march,
    mild_solve,
    modulus_integral_exact,
    monotonicity_shift,
    phi_closed_form,
    pullback_sweep,
    roundtrip_check,
    sandwich_scan,
    solve_phi,
)
from parasol.cli import main as cli_main

PI2 = np.pi**2


def _report(n, ok, detail):
    line = f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


def heat_spec():
    return ProblemSpec(
        lam=1.0,
        f=Reaction("poly", {"coeffs": [0.0]}),
        a=Diffusion("constant", {"value": 1.0}),
        l=SpatialFunctional("l2_norm_sq"),
        h=Forcing("zero"),
    )


def ci_spec():
    """lambda=5 cubic reaction, a = 1 + s/(1+s), squared L2 load, 0.2 sin t."""
    return default_spec()


# -- 1 ------------------------------------------------------------------------


def test_acceptance_01_linear_exactness():
    basis = Basis(64)
    spec = heat_spec()
    w0 = basis.eigenmode(1)
    t0 = time.time()
    errs = []
    for method in ("march", "picard"):
        traj = mild_solve(w0, spec, 1.0, method=method, dt=1e-3)
        exact = np.exp(-PI2 * traj.times)
        errs.append(np.max(np.abs(traj.coeffs[:, 0] - exact)))
        errs.append(np.max(np.abs(traj.coeffs[:, 1:])) if traj.coeffs.shape[1] > 1 else 0.0)
    elapsed = time.time() - t0
    ok = max(errs) <= 1e-8 and elapsed < 1.0
    _report(1, ok, f"both solvers reproduce exp(-pi^2 t): err={max(errs):.2e}, {elapsed:.2f}s")


# -- 2 ------------------------------------------------------------------------


def _rk4_galerkin_oracle(basis, spec, w0_coeffs, checkpoints, dt):
    """Explicit 4th-order integration of the truncated mode system with the
    clock as an extra state; dense matrices keep the stepping tight."""
    n = basis.n_modes
    mu = basis.eigenvalues.copy()
    kk = np.arange(1, n + 1)
    npad = basis.n_padded
    xpad = np.arange(1, npad + 1) / (npad + 1.0)
    S_fwd = np.sqrt(2) * np.sin(np.pi * np.outer(xpad, kk))
    W_inv = np.sqrt(2) * np.sin(np.pi * np.outer(kk, xpad)) / (npad + 1)
    const = basis._const_coeffs
    lam, K = spec.lam, spec.K

    def rhs(u, alpha):
        av = 1.0 + (u @ u) / (1.0 + (u @ u))
        vals = S_fwd @ u
        g = (lam * (W_inv @ (vals - vals**3)) + (K * math.sin(alpha)) * const) / av
        return -mu * u + g, av

    u = w0_coeffs.copy()
    alpha = 0.0
    out = {}
    marks = {int(round(c / dt)): c for c in checkpoints}
    nst = max(marks)
    for i in range(nst):
        du1, da1 = rhs(u, alpha)
        du2, da2 = rhs(u + 0.5 * dt * du1, alpha + 0.5 * dt * da1)
        du3, da3 = rhs(u + 0.5 * dt * du2, alpha + 0.5 * dt * da2)
        du4, da4 = rhs(u + dt * du3, alpha + dt * da3)
        u = u + dt / 6 * (du1 + 2 * du2 + 2 * du3 + du4)
        alpha = alpha + dt / 6 * (da1 + 2 * da2 + 2 * da3 + da4)
        if i + 1 in marks:
            out[marks[i + 1]] = u.copy()
    return out


def test_acceptance_02_brute_force_oracle_equivalence():
    basis = Basis(16)
    spec = ci_spec()
    w0 = basis.eigenmode(1, 0.5)
    checkpoints = [round(0.05 * j, 10) for j in range(1, 11)]
    t0 = time.time()
    oracle = _rk4_galerkin_oracle(basis, spec, w0.coeffs, checkpoints, 1e-6)
    traj = mild_solve(w0, spec, checkpoints[0], method="picard", tol=1e-10)
    mu = basis.eigenvalues
    worst = 0.0
    for cp in checkpoints:
        traj = continue_solution(traj, spec, cp)
        gap = traj.coeffs[-1] - oracle[cp]
        worst = max(worst, float(np.sqrt(np.sum(mu * gap**2))))
    elapsed = time.time() - t0
    ok = worst <= 1e-5 and elapsed < 30.0
    _report(2, ok, f"fixed point vs RK4(1e-6) H^1/2 gap={worst:.2e} on [0,0.5], {elapsed:.1f}s")


# -- 3 ------------------------------------------------------------------------


def test_acceptance_03_roundtrip_reparameterization():
    basis = Basis(16)
    const_spec = ProblemSpec(
        lam=5.0, f=Reaction("cubic"),
        a=Diffusion("constant", {"value": 1.5}),
        l=SpatialFunctional("l2_norm_sq"),
        h=Forcing("sine", {"amplitude": 0.2, "frequency": 1.0}),
    )
    w0 = basis.eigenmode(1, 0.5)
    const_err = roundtrip_check(w0, const_spec, 0.5, dt=1e-3).max_error

    spec = ci_spec()
    errs = {dt: roundtrip_check(w0, spec, 0.5, dt=dt).max_error for dt in (2e-3, 1e-3)}
    ratio = errs[1e-3] / errs[2e-3]
    ok = const_err <= 1e-6 and 0.1 <= ratio <= 0.625
    _report(3, ok, f"const-a err={const_err:.1e}; variable-a halving ratio={ratio:.2f} (first order or better)")


# -- 4 ------------------------------------------------------------------------


def test_acceptance_04_sandwich_inequality_scan():
    spec = ci_spec()
    basis = Basis(64)
    traj = march(basis.eigenmode(1, 0.5), spec, 10.0, dt=1e-3, store_every=10)
    r_inf = 2**-0.5 * float(traj.norms(0.5).max())
    gamma = spec.lam / spec.m * monotonicity_shift(spec.f, r_inf)
    scan = sandwich_scan(spec, r_inf, gamma=gamma)
    ok = scan.violation_count == 0 and scan.monotone_ok
    _report(4, ok, f"bounding chain clean on [-{r_inf:.2f},{r_inf:.2f}], gamma={gamma:.1f}, "
                   f"violations={scan.violation_count}")


# -- 5 ------------------------------------------------------------------------


def test_acceptance_05_comparison_ordering():
    spec = ci_spec()
    basis = Basis(64)
    cert = certify_spec(spec)
    phi = phi_closed_form(cert.nu * cert.C0, cert.C1)
    phi_field = basis.from_values(phi(basis.collocation_nodes))
    w0 = basis.from_values(0.3 * phi(basis.collocation_nodes))
    report = compare_ordered(
        spec, w0 - 0.1 * phi_field, w0, w0 + 0.1 * phi_field,
        t_end=10.0, dt=1e-3, tolerance=1e-6,
    )
    control = compare_ordered(
        spec, w0 - 0.1 * phi_field, w0, w0 + 0.1 * phi_field,
        t_end=10.0, dt=1e-3, tolerance=1e-6, swapped=True,
    )
    ok = report.passed and not control.passed
    _report(5, ok, f"ordered to t=10 (margin {report.max_violation:+.1e}); "
                   f"swapped control fails (margin {control.max_violation:+.1e})")


# -- 6 ------------------------------------------------------------------------


def test_acceptance_06_barrier():
    spec = ci_spec()
    basis = Basis(64)
    cert = certify_spec(spec)
    from parasol import barrier_check

    phi = phi_closed_form(cert.nu * cert.C0, cert.C1)
    w0 = basis.from_values(0.5 * phi(basis.collocation_nodes))
    report = barrier_check(spec, cert, w0, t_end=20.0, tolerance=1e-6)
    ok = report.max_excess_phi <= 1e-6 and report.status == "completed"
    _report(6, ok, f"|u| <= phi to t=20: max excess {report.max_excess_phi:+.1e} "
                   f"(phi_sup={report.phi_sup:.3f})")


# -- 7 ------------------------------------------------------------------------


def test_acceptance_07_phi_oracle():
    basis = Basis(64)
    worst = 0.0
    for c in (-PI2 / 2, 0.0, PI2):
        _, phi = solve_phi(basis, c, 1.0)
        x = np.linspace(np.longdouble(0), np.longdouble(1), 10001)
        h = x[1] - x[0]
        v = phi(x)
        lap = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * h**2)
        worst = max(worst, float(np.max(np.abs(-lap + c * v[2:-2] - 1.0))))
    _, phi0 = solve_phi(basis, 0.0, 1.0)
    mid = float(phi0(np.array(0.5)))
    ok = worst <= 1e-8 and mid == 0.125
    _report(7, ok, f"closed forms: FD residual {worst:.1e} <= 1e-8; midpoint at c=0 is exactly 1/8")


# -- 8 ------------------------------------------------------------------------


def test_acceptance_08_structural_checker():
    cert = check_structural(Reaction("cubic"), 1.0)
    cubic_ok = (
        cert.satisfied_S
        and cert.C0 == pytest.approx(-1.0)
        and cert.C1 == pytest.approx(0.0, abs=1e-12)
        and cert.lambda1 == pytest.approx(PI2 - 1.0)
        and cert.lambda1 > 0
    )
    quintic = check_structural(Reaction("poly", {"coeffs": [0, 0, 0, 0, 0, 1.0]}), 1.0, scan_radius=50.0)
    ok = cubic_ok and not quintic.satisfied_S
    _report(8, ok, f"cubic: (C0,C1,lambda1)=({cert.C0},{cert.C1},{cert.lambda1:.3f}); "
                   f"quintic growth flagged={not quintic.satisfied_S}")


# -- 9 ------------------------------------------------------------------------


def test_acceptance_09_modulus_admissibility():
    conv2, est2 = check_modulus(2.0, 0.25)
    conv1, _ = check_modulus(1.0, 0.25)
    exact = modulus_integral_exact(2.0, 0.25)
    ok = conv2 and not conv1 and abs(est2 - exact) / exact <= 0.05
    _report(9, ok, f"p=2 converges (estimate {est2:.3f} vs analytic {exact:.3f}), p=1 diverges")


# -- 10 -----------------------------------------------------------------------


def test_acceptance_10_pullback_absorption():
    spec = ci_spec()
    basis = Basis(32)
    cert = certify_spec(spec)
    t0 = time.time()
    report = pullback_sweep(
        spec, cert, target_t=0.0, radius=1.0, n_samples=64,
        sigma_schedule=[-(2.0**j) for j in range(9)], basis=basis, dt=1e-3,
    )
    elapsed = time.time() - t0
    k_inf = report.k_inf
    tail_monotone = all(k_inf[j + 1] <= k_inf[j] + 1e-9 for j in range(3, 8))
    final_below_phi = k_inf[-1] <= report.phi_sup + 1e-3
    # monotone up to the roundoff floor that long integrations accumulate
    hd = report.hausdorff
    hd_monotone = all(hd[j + 1] <= hd[j] + 1e-9 for j in range(3, 7))
    hd_collapsed = hd[-1] <= 1e-9
    phi = phi_closed_form(cert.nu * cert.C0, cert.C1)
    phi_nodes = phi(basis.collocation_nodes)
    members_below = all(
        np.all(np.abs(basis.values_matrix(s)) <= phi_nodes[None, :] + 1e-3)
        for s in report.snapshots[3:]
    )
    ok = tail_monotone and final_below_phi and hd_monotone and hd_collapsed and members_below and elapsed < 300
    _report(10, ok, f"K_inf tail nonincreasing, final {k_inf[-1]:.4f} <= phi_sup+1e-3={report.phi_sup + 1e-3:.4f}; "
                    f"Hausdorff collapsed to {hd[-1]:.1e}; {elapsed:.0f}s")


# -- 11 -----------------------------------------------------------------------


def test_acceptance_11_holder_probe_stability():
    spec = ci_spec()
    basis = Basis(64)
    w0 = basis.eigenmode(1, 0.5)
    cs = {}
    for dt in (1e-3, 5e-4):
        traj = march(w0, spec, 1.0, dt=dt)
        cs[dt] = holder_probe(traj, beta=0.25)
    drift = abs(cs[5e-4] - cs[1e-3]) / cs[1e-3]
    ok = drift <= 0.30
    _report(11, ok, f"fitted Holder constant {cs[1e-3]:.3f} -> {cs[5e-4]:.3f} under dt halving "
                    f"({100*drift:.1f}% drift)")


# -- 12 -----------------------------------------------------------------------


def test_acceptance_12_determinism(tmp_path):
    cfg = {
        "solver": {"t_end": 0.2, "n_modes": 16, "dt": 1e-3},
        "experiment": {"name": "attractor", "target_t": 0.0, "radius": 1.0,
                       "n_samples": 8, "n_sigma": 3},
        "output": {"format": "both"},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    blobs = []
    for d in ("r1", "r2"):
        out = tmp_path / d
        assert cli_main(["attractor", "--config", str(cfg_path), "--out", str(out), "--seed", "7"]) == 0
        blobs.append(b"".join(sorted(p.read_bytes() for p in out.glob("*.csv"))))
    solve_cfg = tmp_path / "solve.json"
    solve_cfg.write_text(json.dumps({"solver": {"t_end": 0.2, "n_modes": 16}}))
    for d in ("s1", "s2"):
        assert cli_main(["solve", "--config", str(solve_cfg), "--out", str(tmp_path / d)]) == 0
    same_solve = (tmp_path / "s1" / "trajectory.csv").read_bytes() == (tmp_path / "s2" / "trajectory.csv").read_bytes()
    ok = blobs[0] == blobs[1] and same_solve
    _report(12, ok, "identical config + seed reproduce byte-identical CSV artifacts")
