"""Concrete ingredient catalogs and structural-condition machinery.

A problem instance is the tuple (f, a, l, h, lambda, sigma): reaction f,
nonlocal diffusion coefficient a with bounds 0 < m <= a <= M, scalar
functional l of the spatial profile, time forcing h with sup bound K.
This module also certifies the sign condition

    u f(u) <= -nu C0 u^2 + |u| C1        (for nu = m/lambda and M/lambda)

on a scan radius, computes the barrier phi solving (A + c) phi = C1 both
spectrally and in closed form, and checks admissibility of logarithmic
moduli of continuity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import Basis, SpectralField, apply_resolvent_shifted
from .errors import ConfigError

PI2 = np.pi**2


# -- catalogs ----------------------------------------------------------------


@dataclass(frozen=True)
class Reaction:
    """Scalar reaction term from a small named catalog.

    kinds: ``cubic`` u - u^3, ``linear`` u, ``sine`` sin u,
    ``poly`` with ascending coefficients, and ``envelope`` for the
    division-consistent autonomous bounds built by the comparison module.
    """

    kind: str
    params: dict = dc_field(default_factory=dict)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "cubic":
            return u - u**3
        if self.kind == "linear":
            return u
        if self.kind == "sine":
            return np.sin(u)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(u, np.asarray(self.params["coeffs"], dtype=float))
        if self.kind == "envelope":
            base = Reaction(**self.params["base"])
            lam, K = self.params["lam"], self.params["K"]
            m, M = self.params["m"], self.params["M"]
            side = self.params["side"]
            num = lam * base(u) + side * K
            lo, hi = (M, m) if not self.params.get("swapped", False) else (m, M)
            return np.where(side * num >= 0, num / hi, num / lo)
        raise ValueError(f"unknown reaction kind {self.kind!r}")

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "cubic":
            return 1.0 - 3.0 * u**2
        if self.kind == "linear":
            return np.ones_like(u)
        if self.kind == "sine":
            return np.cos(u)
        if self.kind == "poly":
            c = np.asarray(self.params["coeffs"], dtype=float)
            return np.polynomial.polynomial.polyval(u, np.polynomial.polynomial.polyder(c))
        if self.kind == "envelope":
            base = Reaction(**self.params["base"])
            lam, K = self.params["lam"], self.params["K"]
            m, M = self.params["m"], self.params["M"]
            side = self.params["side"]
            num = lam * base(u) + side * K
            lo, hi = (M, m) if not self.params.get("swapped", False) else (m, M)
            return lam * base.derivative(u) / np.where(side * num >= 0, hi, lo)
        raise ValueError(f"unknown reaction kind {self.kind!r}")

    def sup_abs(self, radius: float, n_points: int = 4096) -> float:
        grid = np.linspace(-radius, radius, n_points)
        return float(np.max(np.abs(self(grid))))

    def to_dict(self):
        return {"kind": self.kind, **({"params": self.params} if self.params else {})}


@dataclass(frozen=True)
class Diffusion:
    """Diffusion coefficient a(s) for s >= 0, with declared bounds [m, M].

    kinds: ``constant`` (value; m = M) and ``saturating``
    a(s) = m + (M - m) s / (1 + s).
    """

    kind: str
    params: dict = dc_field(default_factory=dict)

    @property
    def m(self) -> float:
        if self.kind == "constant":
            return float(self.params["value"])
        return float(self.params["m"])

    @property
    def M(self) -> float:
        if self.kind == "constant":
            return float(self.params["value"])
        return float(self.params["M"])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(np.float64(self.params["value"]), s.shape).copy() if s.shape else float(self.params["value"])
        if self.kind == "saturating":
            m, M = self.m, self.M
            return m + (M - m) * s / (1.0 + s)
        raise ValueError(f"unknown diffusion kind {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, "params": self.params}


@dataclass(frozen=True)
class SpatialFunctional:
    """Scalar functional l of the whole profile, mapped into [0, inf).

    kinds: ``l2_norm_sq``, ``h1_seminorm_sq``, ``mean_abs`` (|integral of u|).
    """

    kind: str

    def __call__(self, u: SpectralField) -> float:
        c = u.coeffs
        if self.kind == "l2_norm_sq":
            return float(np.sum(c**2))
        if self.kind == "h1_seminorm_sq":
            return float(np.sum(u.basis.eigenvalues * c**2))
        if self.kind == "mean_abs":
            return abs(float(np.sum(c * u.basis._const_coeffs)))
        raise ValueError(f"unknown functional kind {self.kind!r}")

    def of_matrix(self, coeffs_matrix: np.ndarray, basis: Basis) -> np.ndarray:
        """Vectorized evaluation over rows of a coefficient matrix."""
        if self.kind == "l2_norm_sq":
            return np.sum(coeffs_matrix**2, axis=-1)
        if self.kind == "h1_seminorm_sq":
            return np.sum(basis.eigenvalues * coeffs_matrix**2, axis=-1)
        if self.kind == "mean_abs":
            return np.abs(coeffs_matrix @ basis._const_coeffs)
        raise ValueError(f"unknown functional kind {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Forcing:
    """Bounded time forcing h with K = sup |h|.

    kinds: ``zero``, ``constant``, ``sine`` A sin(w t),
    ``decaying_exp`` A exp(-|t|).
    """

    kind: str
    params: dict = dc_field(default_factory=dict)

    @property
    def bound(self) -> float:
        if self.kind == "zero":
            return 0.0
        return abs(float(self.params["amplitude"]))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t) if t.shape else 0.0
        A = float(self.params["amplitude"])
        if self.kind == "constant":
            return np.full_like(t, A) if t.shape else A
        if self.kind == "sine":
            return A * np.sin(float(self.params.get("frequency", 1.0)) * t)
        if self.kind == "decaying_exp":
            return A * np.exp(-np.abs(t))
        raise ValueError(f"unknown forcing kind {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, **({"params": self.params} if self.params else {})}


@dataclass(frozen=True)
class ProblemSpec:
    """One nonlocal problem instance."""

    lam: float
    f: Reaction
    a: Diffusion
    l: SpatialFunctional
    h: Forcing
    sigma: float = 0.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigError("lambda", "must be positive")
        if self.a.m <= 0:
            raise ConfigError("a.m", "must be positive")
        if self.a.m > self.a.M:
            raise ConfigError("a.m", "m <= M required")
        # diagnostic grid checks of the declared bounds
        sgrid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 200)])
        avals = self.a(sgrid)
        if np.any(avals < self.a.m - 1e-12) or np.any(avals > self.a.M + 1e-12):
            raise ConfigError("a", "values leave the declared [m, M] range")
        tgrid = np.linspace(-100.0, 100.0, 2001)
        if np.any(np.abs(self.h(tgrid)) > self.h.bound + 1e-12):
            raise ConfigError("h", "values exceed the declared bound K")

    @property
    def m(self):
        return self.a.m

    @property
    def M(self):
        return self.a.M

    @property
    def K(self):
        return self.h.bound

    def nu_values(self) -> tuple[float, float]:
        return self.m / self.lam, self.M / self.lam

    def to_dict(self):
        return {
            "lambda": self.lam,
            "sigma": self.sigma,
            "f": self.f.to_dict(),
            "a": self.a.to_dict(),
            "l": self.l.to_dict(),
            "h": self.h.to_dict(),
        }


def default_spec(sigma: float = 0.0) -> ProblemSpec:
    """The default catalog instance: lambda=5 cubic reaction, saturating
    diffusion in [1,2], squared L2 functional, 0.2 sin t forcing."""
    return ProblemSpec(
        lam=5.0,
        f=Reaction("cubic"),
        a=Diffusion("saturating", {"m": 1.0, "M": 2.0}),
        l=SpatialFunctional("l2_norm_sq"),
        h=Forcing("sine", {"amplitude": 0.2, "frequency": 1.0}),
        sigma=sigma,
    )


# -- structural condition ----------------------------------------------------


@dataclass(frozen=True)
class StructuralCertificate:
    """Certified constants for u f(u) <= -nu C0 u^2 + |u| C1."""

    nu: float
    C0: float
    C1: float
    lambda1: float
    satisfied_S: bool
    satisfied_D: bool
    nu_all: tuple = ()

    def to_dict(self):
        return {
            "nu": self.nu,
            "C0": self.C0,
            "C1": self.C1,
            "lambda1": self.lambda1,
            "satisfied_S": self.satisfied_S,
            "satisfied_D": self.satisfied_D,
            "nu_all": list(self.nu_all),
        }


DEFAULT_C0_CANDIDATES = tuple(np.arange(-4.0, 4.01, 0.5))


def _polished_max(q: np.ndarray, ugrid: np.ndarray, f: Reaction, nu: float, C0: float) -> float:
    """Grid max of q plus a local refinement so denser re-scans cannot beat it."""
    i = int(np.argmax(q))
    lo = ugrid[max(i - 1, 0)]
    hi = ugrid[min(i + 1, len(ugrid) - 1)]
    fine = np.linspace(lo, hi, 2001)
    fine = fine[fine != 0.0]
    qf = (fine * f(fine) + nu * C0 * fine**2) / np.abs(fine)
    return max(float(q[i]), float(qf.max()))


def _candidate_c1(f: Reaction, nus, C0: float, ugrid: np.ndarray) -> tuple[float, bool]:
    """Minimal C1 for one C0 over all nu, plus a non-finiteness flag.

    The flag fires when (u f(u) + nu C0 u^2)/|u| keeps growing superlinearly
    toward the scan boundary, i.e. no finite C1 can dominate as the radius
    grows.  Superquadratic positive growth of u f(u) trips it for every C0.
    """
    R = ugrid[-1]
    c1 = -np.inf
    flagged = False
    for nu in nus:
        q = (ugrid * f(ugrid) + nu * C0 * ugrid**2) / np.abs(ugrid)
        c1 = max(c1, _polished_max(q, ugrid, f, nu, C0))
        q_edge = float(q[-1])
        q_half = float(q[np.argmin(np.abs(ugrid - R / 2.0))])
        if q_edge > 0 and q_half > 0 and q_edge / q_half > 2.0**1.05:
            flagged = True
    return c1, flagged


def check_structural(
    f: Reaction,
    nu,
    scan_radius: float = 10.0,
    grid_points: int = 100001,
    candidates=DEFAULT_C0_CANDIDATES,
) -> StructuralCertificate:
    """Search C0 candidates and certify the sign condition on a finite radius.

    ``nu`` may be a single value or a sequence; with several values one
    (C0, C1) pair is certified jointly for all of them and lambda1 is the
    first eigenvalue of A + nu C0 under the least favorable nu.

    Selection: candidates whose growth test fails are discarded; among the
    survivors, candidates achieving C1 = 0 are preferred (they certify decay
    to zero) with the largest lambda1; otherwise the largest lambda1 wins.
    """
    if scan_radius <= 0:
        raise ValueError("scan_radius must be positive")
    if grid_points < 1000:
        raise ValueError("grid_points must be at least 1000")
    nus = tuple(np.atleast_1d(np.asarray(nu, dtype=float)))
    ugrid = np.linspace(-scan_radius, scan_radius, int(grid_points))
    ugrid = ugrid[ugrid != 0.0]

    feasible = []
    for C0 in candidates:
        c1, flagged = _candidate_c1(f, nus, float(C0), ugrid)
        if not flagged:
            feasible.append((float(C0), max(0.0, c1)))

    def lam1(C0):
        return PI2 + min(n * C0 for n in nus)

    if not feasible:
        worst = min(nus)
        return StructuralCertificate(
            nu=worst, C0=float("nan"), C1=float("inf"), lambda1=float("-inf"),
            satisfied_S=False, satisfied_D=False, nu_all=nus,
        )

    zero_c1 = [fc for fc in feasible if fc[1] <= 1e-12]
    pool = zero_c1 if zero_c1 else feasible
    C0, C1 = max(pool, key=lambda fc: lam1(fc[0]))
    nu_eff = min(nus, key=lambda n: n * C0)
    l1 = lam1(C0)
    return StructuralCertificate(
        nu=nu_eff, C0=C0, C1=C1, lambda1=l1,
        satisfied_S=True, satisfied_D=bool(l1 > 0), nu_all=nus,
    )


def certify_spec(spec: ProblemSpec, scan_radius: float = 10.0, grid_points: int = 100001) -> StructuralCertificate:
    """Joint certificate over both nu = m/lambda and nu = M/lambda."""
    return check_structural(spec.f, spec.nu_values(), scan_radius, grid_points)


# -- barrier phi -------------------------------------------------------------


def phi_closed_form(c: float, C1: float):
    """Pointwise evaluator for the solution of -phi'' + c phi = C1, phi(0)=phi(1)=0."""
    if c <= -PI2:
        raise ValueError("c must exceed -pi^2")
    if C1 < 0:
        raise ValueError("C1 must be nonnegative")
    if c == 0.0:

        def phi(x):
            x = np.asarray(x)  # dtype preserving: callers may probe in extended precision
            return 0.5 * C1 * x * (1.0 - x)

    elif c > 0:
        s = np.sqrt(c)

        def phi(x):
            x = np.asarray(x)
            return (C1 / c) * (1.0 - np.cosh(s * (x - 0.5)) / np.cosh(s / 2.0))

    else:
        s = np.sqrt(-c)

        def phi(x):
            x = np.asarray(x)
            return (C1 / c) * (1.0 - np.cos(s * (x - 0.5)) / np.cos(s / 2.0))

    return phi


def solve_phi(basis: Basis, c: float, C1: float):
    """Barrier phi as a spectral field plus its closed-form evaluator.

    The spectral route applies the shifted resolvent to the truncated sine
    expansion of the constant C1; the two representations agree at the nodes
    up to the truncation error of that slowly decaying expansion.
    """
    spectral = apply_resolvent_shifted(basis.constant(C1), c)
    return spectral, phi_closed_form(c, C1)


def phi_sup(c: float, C1: float, n_grid: int = 20001) -> float:
    phi = phi_closed_form(c, C1)
    x = np.linspace(0.0, 1.0, n_grid)
    return float(phi(x).max(initial=0.0))


# -- embedding and moduli ----------------------------------------------------


def embedding_constant() -> float:
    """Constant in ||u||_inf <= c ||u'||_L2 on (0,1): c = 2**-0.5.

    From |u(x)| <= min(sqrt(x), sqrt(1-x)) ||u'||_L2 at x = 1/2.
    """
    return 2.0**-0.5


def check_modulus(p: float, beta: float, t0: float = np.exp(-1.0), n_levels: int = 24):
    """Admissibility of the modulus w(x) = (ln 1/x)^-p for the integral
    of u^-1 w(u^beta) near zero.

    Integrates over shells whose endpoints shrink doubly exponentially,
    eps_j = exp(-2^j ln(1/t0)), so shell contributions of an admissible
    modulus decay geometrically (ratio 2^(1-p)); a constant shell sequence
    signals divergence.  Returns (converged, estimate).
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0,1)")
    # substitute u = exp(-v): integrand u^-1 (ln(1/u^beta))^-p du = (beta v)^-p dv
    L0 = np.log(1.0 / t0)
    levels = L0 * 2.0 ** np.arange(n_levels + 1)
    shells = []
    for lo, hi in zip(levels[:-1], levels[1:]):
        v = np.linspace(lo, hi, 513)
        shells.append(float(np.trapezoid((beta * v) ** -p, v)))
    shells = np.array(shells)
    ratios = shells[1:] / shells[:-1]
    converged = bool(np.all(ratios[-6:] < 0.95))
    estimate = float(shells.sum())
    if converged:
        r = float(ratios[-1])
        estimate += float(shells[-1]) * r / (1.0 - r)
    return converged, estimate


def modulus_integral_exact(p: float, beta: float, t0: float = np.exp(-1.0)) -> float:
    """Antiderivative value of the shell integrals for p > 1 (oracle)."""
    if p <= 1:
        raise ValueError("diverges for p <= 1")
    L0 = np.log(1.0 / t0)
    return beta**-p * L0 ** (1.0 - p) / (p - 1.0)


def monotonicity_shift(f: Reaction, radius: float, grid_points: int = 20001) -> float:
    """Smallest nonnegative k (inflated 10%) making f(s) + k s nondecreasing
    on [-radius, radius], from the grid minimum of f'."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    grid = np.linspace(-radius, radius, grid_points)
    try:
        slopes = f.derivative(grid)
    except ValueError:
        dg = grid[1] - grid[0]
        slopes = (f(grid + dg) - f(grid - dg)) / (2 * dg)
    return 1.1 * max(0.0, -float(np.min(slopes)))
