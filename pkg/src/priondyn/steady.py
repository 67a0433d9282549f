"""Coexistence steady state: root finding, profile checks, mode structure."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from .coefficients import Affine, Bell, Constant, CoefficientSet, ScaledBell, eval_coefficients
from .eigen import EigenSolution, _principal_on_matrix, _v0_loss_rate, _finalize_vector
from .grid import SizeGrid
from .operator import transport_reaction_parts

__all__ = [
    "VInfResult",
    "SteadyState",
    "StationaryCheck",
    "BimodalityReport",
    "find_v_inf",
    "build_steady_state",
    "stationary_profile_check",
    "bimodality_report",
]

ROOT_TOL = 1e-8


@dataclass(frozen=True)
class VInfResult:
    """Outcome of the loss-rate root search.

    When found is False, (bracket_lo, bracket_hi) is the scanned range that
    produced no sign change.  monotone_warning is set if the ladder values
    failed to decrease on the way to the bracket; the root is still
    returned (the sign change is what bisection needs).
    """

    found: bool
    v_inf: Optional[float]
    lambda_at_root: Optional[float]
    bracket_lo: float
    bracket_hi: float
    evaluations: int
    monotone_warning: Optional[str] = None


def _lambda_factory(coeffs: CoefficientSet, grid: SizeGrid, tol: float = 1e-10):
    """Loss rate as a plain function of the monomer level, parts prebuilt."""
    T, B, _ = transport_reaction_parts(coeffs, grid)
    h = grid.widths
    calls = [0]

    def lam(v: float) -> float:
        calls[0] += 1
        if v == 0.0:
            return _v0_loss_rate(coeffs, grid)
        nu, _, _, _, _ = _principal_on_matrix(v * T + B, h, tol=tol)
        return -nu

    def eigvec(v: float):
        nu, vec, r, log, it = _principal_on_matrix(v * T + B, h, tol=tol)
        vec = _finalize_vector(vec, h, "eigenvector")
        return EigenSolution(v=float(v), lambda_eig=float(-nu), u_vec=vec,
                             phi_vec=None, residual=r, iterations=it,
                             grid=grid, residual_log=log)

    return lam, eigvec, calls


def find_v_inf(coeffs: CoefficientSet, grid: SizeGrid,
               v_max: Optional[float] = None,
               root_tol: float = ROOT_TOL) -> VInfResult:
    """Locate the monomer level where the loss rate crosses zero.

    Geometric ladder (doubling from 1) brackets the sign change inside
    [0, v_max], then plain bisection drives |loss rate| below root_tol.
    Bisection rather than anything slope-based: the decrease of the loss
    rate is a conclusion the scan certifies, not an assumption the root
    finder leans on.  v_max defaults to ten times the uninfected level
    production/clearance.
    """
    if v_max is None:
        if coeffs.clearance > 0.0:
            v_max = 10.0 * coeffs.production / coeffs.clearance
        else:
            v_max = 6000.0
    lam, _, calls = _lambda_factory(coeffs, grid)

    lo, f_lo = 0.0, lam(0.0)
    if f_lo < 0.0:
        # already negative with no transport: nothing to bracket
        return VInfResult(found=False, v_inf=None, lambda_at_root=None,
                          bracket_lo=0.0, bracket_hi=0.0, evaluations=calls[0],
                          monotone_warning="loss rate negative at v=0")
    ladder_vals = [f_lo]
    warning = None
    hi = min(1.0, v_max)
    while True:
        f_hi = lam(hi)
        ladder_vals.append(f_hi)
        if f_hi <= 0.0:
            break
        lo, f_lo = hi, f_hi
        if hi >= v_max:
            return VInfResult(found=False, v_inf=None, lambda_at_root=None,
                              bracket_lo=0.0, bracket_hi=v_max,
                              evaluations=calls[0])
        hi = min(2.0 * hi, v_max)
    if np.any(np.diff(ladder_vals) >= 0.0):
        warning = ("loss rate not strictly decreasing over the ladder; "
                   "root is still bracketed")

    # bisection until the loss rate itself is small
    f_mid = f_lo
    mid = lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = lam(mid)
        if abs(f_mid) <= root_tol:
            break
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return VInfResult(found=True, v_inf=float(mid), lambda_at_root=float(f_mid),
                      bracket_lo=float(lo), bracket_hi=float(hi),
                      evaluations=calls[0], monotone_warning=warning)


@dataclass
class SteadyState:
    """Non-trivial steady state of the coupled system, when it exists.

    u_profile is the unit-count eigenprofile at v_inf; u_inf = rho_inf *
    u_profile is the physical density, present only when the existence
    constraint v_inf < vbar holds (otherwise the count formula would be
    nonpositive and rho_inf/u_inf stay None).
    """

    v_inf: float
    rho_inf: Optional[float]
    u_inf: Optional[np.ndarray]
    exists: bool
    vbar: float
    grid: SizeGrid
    coeffs: CoefficientSet
    u_profile: np.ndarray = field(repr=False)
    conv_average: float = 0.0
    root: Optional[VInfResult] = None

    def center_of_mass(self) -> float:
        xh = self.grid.centers * self.grid.widths
        return float((xh @ self.u_profile) / (self.grid.widths @ self.u_profile))


def build_steady_state(coeffs: CoefficientSet, grid: SizeGrid,
                       v_max: Optional[float] = None) -> SteadyState:
    """Solve for the steady state: root, eigenprofile, count, existence."""
    root = find_v_inf(coeffs, grid, v_max=v_max)
    if not root.found:
        raise ValueError(
            "no loss-rate root in (0, %g); cannot build a steady state"
            % root.bracket_hi)
    _, eigvec, _ = _lambda_factory(coeffs, grid)
    sol = eigvec(root.v_inf)
    conv, _, _ = eval_coefficients(coeffs, grid)
    conv_avg = float((conv * sol.u_vec) @ grid.widths)
    vbar = coeffs.production / coeffs.clearance if coeffs.clearance > 0.0 else np.inf
    exists = root.v_inf < vbar
    rho = None
    u_inf = None
    if exists:
        rho = (coeffs.production / root.v_inf - coeffs.clearance) / conv_avg
        u_inf = rho * sol.u_vec
    return SteadyState(v_inf=root.v_inf, rho_inf=rho, u_inf=u_inf,
                       exists=exists, vbar=vbar, grid=grid, coeffs=coeffs,
                       u_profile=sol.u_vec, conv_average=conv_avg, root=root)


@dataclass(frozen=True)
class StationaryCheck:
    """Residuals of the stationary second-order form and its boundary data."""

    ode_residual_norm: float
    boundary_value: float
    flux_residual: float


def _in_quadratic_class(coeffs: CoefficientSet) -> bool:
    return (isinstance(coeffs.decay, Constant)
            and isinstance(coeffs.fragmentation, Affine)
            and coeffs.fragmentation.intercept == 0.0
            and coeffs.kernel == "uniform")


def stationary_ode_residual(x: np.ndarray, u: np.ndarray, v_inf: float,
                            conv: np.ndarray, decay0: float,
                            frag_slope: float) -> np.ndarray:
    """Pointwise residual of the differentiated stationary equation.

    v_inf*(conv*u)'' + ((decay0 + frag_slope*x)*u)' + 2*frag_slope*u,
    centered differences, endpoints excluded by the caller.
    """
    cu = conv * u
    d2 = np.zeros_like(u)
    d2[1:-1] = (cu[2:] - 2.0 * cu[1:-1] + cu[:-2]) / (x[2] - x[1]) ** 2
    g = (decay0 + frag_slope * x) * u
    d1 = np.gradient(g, x)
    return v_inf * d2 + d1 + 2.0 * frag_slope * u


def stationary_profile_check(ss: SteadyState) -> StationaryCheck:
    """Verify the computed profile against the stationary second-order form.

    Only valid for constant decay with origin-anchored linear splitting
    (the class the second-order form is derived in); other configurations
    raise.  Residual norm is a mass-weighted l1 average over interior
    cells, normalized by the profile scale; the flux residual compares the
    left-edge conversion-flux slope against twice the splitting slope
    times the total count (relative).  The boundary value is the imposed
    inflow value, identically zero under the scheme.
    """
    if not ss.exists:
        raise ValueError("steady state does not exist; nothing to check")
    if not _in_quadratic_class(ss.coeffs):
        raise ValueError("stationary-form check requires constant decay and "
                         "origin-anchored linear splitting with the uniform rule")
    if ss.grid.spacing != "uniform":
        raise ValueError("stationary-form check uses centered differences; "
                         "run it on a uniform grid")
    grid = ss.grid
    x, h = grid.centers, grid.widths
    u = ss.u_profile
    conv, _, _ = eval_coefficients(ss.coeffs, grid)
    decay0 = ss.coeffs.decay.value
    slope = ss.coeffs.fragmentation.slope
    res = stationary_ode_residual(x, u, ss.v_inf, conv, decay0, slope)
    interior = slice(1, -1)
    norm = float(np.abs(res[interior] * h[interior]).sum()) / (
        2.0 * slope * float(np.abs(u * h).sum()) + 1e-300)

    count = float(u @ h)
    # left-edge slope of the conversion flux, through the imposed zero at
    # x0; under upwinding the first cell value samples the right face,
    # so the lever arm is the full cell width, not the half-width
    left_slope = conv[0] * u[0] / (x[0] + 0.5 * h[0] - grid.x0)
    flux_resid = abs(ss.v_inf * left_slope - 2.0 * slope * count) / (2.0 * slope * count)
    return StationaryCheck(ode_residual_norm=norm, boundary_value=0.0,
                           flux_residual=float(flux_resid))


@dataclass(frozen=True)
class BimodalityReport:
    """Mode structure of the stationary profile.

    necessary_condition_met evaluates v_inf * min(conv'') < -3*frag_slope,
    the curvature threshold a second interior mode requires; it is None
    when the splitting rate is not origin-anchored linear (the class the
    threshold is derived in).  potential samples
    v_inf*conv(x) + decay0*x + frag_slope*x**2/2 under the same proviso.
    """

    n_modes: int
    mode_locations: np.ndarray
    necessary_condition_met: Optional[bool]
    potential: Optional[np.ndarray]
    center_of_mass: float
    secondary_mass_fraction: float
    prominences: np.ndarray


def _shape_second_derivative(shape, x: np.ndarray) -> np.ndarray:
    """Analytic curvature of a rate shape on the grid."""
    x = np.asarray(x, dtype=float)
    if isinstance(shape, (Constant, Affine)):
        return np.zeros_like(x)
    if isinstance(shape, Bell):
        d = x - shape.center
        e = np.exp(-d * d / shape.width_sq)
        return shape.amplitude * e * (4.0 * d * d / shape.width_sq ** 2 - 2.0 / shape.width_sq)
    if isinstance(shape, ScaledBell):
        a = shape.tightness
        s = a * (x - shape.center)
        g = np.exp(-0.5 * s * s) / np.sqrt(2.0 * np.pi)
        return a ** 3 * (s * s - 1.0) * g
    raise TypeError("no curvature rule for %r" % type(shape).__name__)


def detect_modes(u: np.ndarray, grid: SizeGrid,
                 prominence_fraction: float = 0.01,
                 boundary_cells: int = 2):
    """Interior maxima of a profile after 3-point smoothing.

    Returns (indices, prominences).  Peaks within boundary_cells of either
    end are discarded: the outflow cell and the imposed-zero inflow cell
    carry scheme artifacts, not structure.
    """
    sm = u.astype(float).copy()
    sm[1:-1] = (u[:-2] + u[1:-1] + u[2:]) / 3.0
    idx, props = find_peaks(sm, prominence=prominence_fraction * float(sm.max()))
    keep = (idx >= boundary_cells) & (idx <= grid.n - 1 - boundary_cells)
    return idx[keep], props["prominences"][keep]


def bimodality_report(ss: SteadyState, coeffs: Optional[CoefficientSet] = None) -> BimodalityReport:
    """Count and locate the modes of the stationary profile."""
    coeffs = coeffs if coeffs is not None else ss.coeffs
    grid = ss.grid
    u = ss.u_profile
    idx, prom = detect_modes(u, grid)
    if idx.size == 0:
        # a nonzero profile always has at least its global maximum
        idx = np.array([int(np.argmax(u))])
        prom = np.array([float(u.max())])
    locations = grid.centers[idx]

    frac = 0.0
    if idx.size >= 2:
        i1, i2 = int(idx[0]), int(idx[-1])
        valley = i1 + int(np.argmin(u[i1:i2 + 1]))
        mh = u * grid.widths
        left = float(mh[:valley].sum())
        right = float(mh[valley:].sum())
        frac = min(left, right) / (left + right)

    cond = None
    potential = None
    if (isinstance(coeffs.fragmentation, Affine)
            and coeffs.fragmentation.intercept == 0.0):
        slope = coeffs.fragmentation.slope
        curv = _shape_second_derivative(coeffs.conversion, grid.centers)
        cond = bool(ss.v_inf * float(curv.min()) < -3.0 * slope)
        if isinstance(coeffs.decay, Constant):
            conv, _, _ = eval_coefficients(coeffs, grid)
            x = grid.centers
            potential = ss.v_inf * conv + coeffs.decay.value * x + 0.5 * slope * x * x

    return BimodalityReport(n_modes=int(idx.size), mode_locations=locations,
                            necessary_condition_met=cond, potential=potential,
                            center_of_mass=ss.center_of_mass(),
                            secondary_mass_fraction=float(frac),
                            prominences=np.asarray(prom, dtype=float))
