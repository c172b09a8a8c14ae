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
    default_spec,
    embedding_constant,
    modulus_integral_exact,
    monotonicity_shift,
    phi_closed_form,
    solve_phi,
)
from parasol.errors import ConfigError

PI2 = np.pi**2


# -- catalogs ------------------------------------------------------------------


def test_reaction_catalog_values():
    u = np.linspace(-2, 2, 11)
    assert np.allclose(Reaction("cubic")(u), u - u**3)
    assert np.allclose(Reaction("linear")(u), u)
    assert np.allclose(Reaction("sine")(u), np.sin(u))
    assert np.allclose(Reaction("poly", {"coeffs": [0, 0, 0, 0, 1]})(u), u**4)


def test_diffusion_bounds_and_spec_validation():
    a = Diffusion("saturating", {"m": 1.0, "M": 2.0})
    s = np.geomspace(1e-8, 1e8, 100)
    assert np.all(a(s) >= 1.0) and np.all(a(s) <= 2.0)
    with pytest.raises(ConfigError, match="a.m"):
        ProblemSpec(
            lam=1.0,
            f=Reaction("cubic"),
            a=Diffusion("saturating", {"m": 2.0, "M": 1.0}),
            l=SpatialFunctional("l2_norm_sq"),
            h=Forcing("zero"),
        )
    with pytest.raises(ConfigError, match="lambda"):
        ProblemSpec(
            lam=-1.0,
            f=Reaction("cubic"),
            a=Diffusion("constant", {"value": 1.0}),
            l=SpatialFunctional("l2_norm_sq"),
            h=Forcing("zero"),
        )


def test_functionals(basis64):
    u = basis64.eigenmode(2, 3.0)
    assert SpatialFunctional("l2_norm_sq")(u) == pytest.approx(9.0)
    assert SpatialFunctional("h1_seminorm_sq")(u) == pytest.approx(9.0 * (2 * np.pi) ** 2)
    # integral of sqrt(2) sin(2 pi x) vanishes; of the first mode it is 2 sqrt(2)/pi
    assert SpatialFunctional("mean_abs")(u) == pytest.approx(0.0, abs=1e-14)
    assert SpatialFunctional("mean_abs")(basis64.eigenmode(1)) == pytest.approx(2 * np.sqrt(2) / np.pi)


# -- structural condition --------------------------------------------------------


def test_structural_cubic_nu_one():
    cert = check_structural(Reaction("cubic"), 1.0)
    assert cert.satisfied_S and cert.satisfied_D
    assert cert.C0 == pytest.approx(-1.0)
    assert cert.C1 == pytest.approx(0.0, abs=1e-12)
    assert cert.lambda1 == pytest.approx(PI2 - 1.0)


def test_structural_linear_nu_one():
    cert = check_structural(Reaction("linear"), 1.0)
    assert cert.C0 == pytest.approx(-1.0)
    assert cert.C1 == pytest.approx(0.0, abs=1e-12)
    assert cert.lambda1 == pytest.approx(PI2 - 1.0)


def test_structural_restricted_candidate_matches_grid_oracle():
    cert = check_structural(Reaction("cubic"), 1.0, candidates=(0.0,))
    u = np.linspace(-10, 10, 2_000_001)
    u = u[u != 0]
    oracle = np.max((u**2 - u**4) / np.abs(u))
    assert cert.C0 == 0.0
    assert cert.C1 == pytest.approx(oracle, rel=1e-6)
    # the analytic max of |u| - |u|^3 sits at 1/sqrt(3)
    assert cert.C1 == pytest.approx(2.0 / (3.0 * np.sqrt(3.0)), rel=1e-6)


def test_structural_growth_flag_for_superquadratic():
    cert = check_structural(Reaction("poly", {"coeffs": [0, 0, 0, 0, 0, 1]}), 1.0, scan_radius=50.0)
    assert not cert.satisfied_S
    assert not cert.satisfied_D


def test_structural_certificate_soundness_rescan(spec):
    cert = certify_spec(spec)
    assert cert.satisfied_S and cert.satisfied_D
    u = np.linspace(-10, 10, 1_000_001)
    u = u[u != 0]
    for nu in spec.nu_values():
        lhs = u * spec.f(u)
        rhs = -nu * cert.C0 * u**2 + np.abs(u) * cert.C1
        assert np.max(lhs - rhs) <= 1e-9


def test_structural_lambda1_is_shifted_first_eigenvalue():
    cert = check_structural(Reaction("cubic"), 0.5)
    assert cert.lambda1 == pytest.approx(PI2 + 0.5 * cert.C0)


# -- barrier ---------------------------------------------------------------------


def test_phi_midpoint_exact_at_c_zero(basis64):
    _, phi = solve_phi(basis64, 0.0, 1.0)
    assert phi(np.array(0.5)) == pytest.approx(0.125)


def _fd_residual(phi, c, C1, n=10001):
    # fourth-order centered second difference on the 1e4-point grid; extended
    # precision keeps the difference-quotient cancellation below the 1e-8 target
    x = np.linspace(np.longdouble(0), np.longdouble(1), n)
    h = x[1] - x[0]
    v = phi(x)
    lap = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * h**2)
    return float(np.max(np.abs(-lap + c * v[2:-2] - C1)))


@pytest.mark.parametrize("c", [-PI2 / 2, 0.0, PI2])
def test_phi_closed_form_fd_residual(basis64, c):
    _, phi = solve_phi(basis64, c, 1.0)
    assert _fd_residual(phi, c, 1.0) < 1e-8
    assert phi(np.linspace(0, 1, 1001)).min() >= -1e-14


@pytest.mark.parametrize("c", [-PI2 / 2, 0.0, PI2])
def test_phi_spectral_matches_closed_form_at_nodes(basis64, c):
    spectral, phi = solve_phi(basis64, c, 1.0)
    nodes = basis64.collocation_nodes
    gap = np.max(np.abs(spectral.values() - phi(nodes)))
    # truncation floor of the constant's slowly decaying expansion at 64 modes
    assert gap / np.max(phi(nodes)) < 1e-4
    assert spectral.values().min() >= -1e-6


def test_phi_domain_error():
    basis = Basis(8)
    with pytest.raises(ValueError):
        solve_phi(basis, -PI2, 1.0)
    with pytest.raises(ValueError):
        solve_phi(basis, 0.0, -1.0)


# -- embedding -------------------------------------------------------------------


def test_embedding_constant_on_first_mode(basis64):
    u = basis64.eigenmode(1)
    assert embedding_constant() == pytest.approx(2**-0.5)
    assert u.sup_value() <= embedding_constant() * u.norm(0.5) + 1e-12
    assert basis64.zero().sup_value() == 0.0


def test_embedding_random_band_limited(basis64, rng):
    for _ in range(100):
        c = np.zeros(64)
        c[:32] = rng.standard_normal(32) / np.arange(1, 33)
        u = basis64.field(c)
        assert u.sup_value() <= embedding_constant() * u.norm(0.5) + 1e-12


# -- modulus admissibility ---------------------------------------------------------


def test_modulus_p2_converges_matching_analytic():
    converged, estimate = check_modulus(2.0, 0.25)
    assert converged
    exact = modulus_integral_exact(2.0, 0.25)
    assert exact == pytest.approx(16.0)  # 16 * int_1^inf s^-2 ds
    assert estimate == pytest.approx(exact, rel=0.05)


def test_modulus_p1_diverges():
    converged, _ = check_modulus(1.0, 0.25)
    assert not converged


def test_modulus_p15_within_five_percent():
    converged, estimate = check_modulus(1.5, 0.25)
    assert converged
    assert estimate == pytest.approx(modulus_integral_exact(1.5, 0.25), rel=0.05)


# -- monotonicity shift --------------------------------------------------------------


def test_monotonicity_shift_cubic():
    k = monotonicity_shift(Reaction("cubic"), 2.0)
    assert k >= 3 * 2.0**2 - 1  # -min f' = 11 on [-2,2]
    assert k == pytest.approx(1.1 * 11.0, rel=1e-3)
    grid = np.linspace(-2, 2, 10001)
    shifted = Reaction("cubic")(grid) + k * grid
    assert np.all(np.diff(shifted) >= 0)


def test_monotonicity_shift_linear_is_zero():
    assert monotonicity_shift(Reaction("linear"), 5.0) == 0.0


def test_monotonicity_shift_sine_grid_oracle():
    k = monotonicity_shift(Reaction("sine"), np.pi)
    grid = np.linspace(-np.pi, np.pi, 300001)
    oracle = max(0.0, -np.cos(grid).min())
    assert k >= oracle
    assert k == pytest.approx(1.1 * oracle, rel=1e-3)
