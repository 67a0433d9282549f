"""Principal eigenpair machinery for the frozen-monomer polymer operator.

Sign convention, fixed once: the assembled matrix is the generator G of
du/dt = G u, whose principal eigenvalue nu has the population evolving like
exp(nu*t).  Everything user-facing stores lambda_eig = -nu, the LOSS rate,
and exposes growth_rate = -lambda_eig = nu.  Negative lambda_eig means the
polymer population grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eig as dense_eig, lu_factor, lu_solve

from .coefficients import CoefficientSet, Constant, eval_coefficients
from .grid import SizeGrid
from .operator import assemble, assemble_adjoint, transport_reaction_parts

__all__ = [
    "EigenSolution",
    "EigenConvergenceError",
    "PositivityViolationError",
    "MomentEstimates",
    "ScanResult",
    "HypothesisConstants",
    "principal_eigenpair",
    "eigenvalue_from_moments",
    "adjoint_eigenpair",
    "scan_lambda",
    "hypothesis_constants",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
DENSE_FALLBACK_MAX_N = 400


class EigenConvergenceError(RuntimeError):
    """Iteration budget exhausted; carries the last residual seen."""

    def __init__(self, message: str, last_residual: float):
        super().__init__(message)
        self.last_residual = last_residual


class PositivityViolationError(RuntimeError):
    """Converged vector has negative entries beyond tolerance."""


@dataclass
class EigenSolution:
    """Converged eigenpair at one monomer level.

    lambda_eig is the loss rate (see module docstring); u_vec is the
    nonnegative eigenvector normalized to unit count, sum(u*h) = 1;
    phi_vec is the adjoint weight when this solution came from the adjoint
    solve, normalized so its linear extrapolation to the minimal size
    equals 1 (recorded in phi_normalization).  residual is the l1 norm of
    (G - nu)v at convergence; residual_log holds the inverse-iteration
    history.
    """

    v: float
    lambda_eig: float
    u_vec: Optional[np.ndarray]
    phi_vec: Optional[np.ndarray]
    residual: float
    iterations: int
    grid: SizeGrid
    phi_normalization: str = "phi(x0)=1"
    degenerate: bool = False
    method: str = "inverse-iteration"
    residual_log: list = field(default_factory=list, repr=False)

    @property
    def growth_rate(self) -> float:
        return -self.lambda_eig


def _principal_on_matrix(A: np.ndarray, h: np.ndarray,
                         tol: float = DEFAULT_TOL,
                         max_iter: int = DEFAULT_MAX_ITER):
    """Principal eigenpair of a Metzler matrix by warm-started inverse iteration.

    Power iteration on I + s*A (s small enough that the shift is
    nonnegative; A Metzler makes the off-diagonal part already >= 0) walks
    toward the Perron vector, then one LU-factored shifted solve iterates to
    convergence with Rayleigh-quotient eigenvalue updates.  The convergence
    test compares the l1 residual against tol * max absolute row sum.

    Returns (nu, vec, residual, res_log) with sum(vec*h) = 1.
    """
    n = A.shape[0]
    scale = np.abs(A).sum(axis=1).max()
    s = 0.99 / max(np.abs(np.diag(A)).max(), 1e-300)
    M = np.eye(n) + s * A
    v = np.ones(n)
    for _ in range(80):
        v = M @ v
        v /= np.abs(v).sum()
    nu = (v @ (A @ v)) / (v @ v)

    res_log: list = []
    offset = 1e-6 * max(1.0, abs(nu))
    try:
        lu = lu_factor(A - (nu + offset) * np.eye(n))
    except LinAlgError:
        # shift landed on an eigenvalue; back off
        lu = lu_factor(A - (nu + 1e-3 * max(1.0, abs(nu))) * np.eye(n))
    r = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        w = lu_solve(lu, v)
        v = w / np.abs(w).sum()
        if v.sum() < 0.0:
            v = -v
        nu = (v @ (A @ v)) / (v @ v)
        r = float(np.abs(A @ v - nu * v).sum())
        res_log.append(r)
        if r < tol * scale:
            break
    else:
        raise EigenConvergenceError(
            "no convergence after %d inverse iterations (residual %.3e, "
            "needed %.3e)" % (max_iter, r, tol * scale), last_residual=r)
    v = v / (v @ h)
    return float(nu), v, r, res_log, it


def _dense_principal(A: np.ndarray, h: np.ndarray):
    """Full dense eigendecomposition; validation path for small operators."""
    vals, vecs = dense_eig(A)
    i = int(np.argmax(vals.real))
    nu = float(vals[i].real)
    v = vecs[:, i].real
    if v.sum() < 0.0:
        v = -v
    v = v / (v @ h)
    r = float(np.abs(A @ v - nu * v).sum())
    return nu, v, r


def _finalize_vector(v: np.ndarray, h: np.ndarray, what: str) -> np.ndarray:
    """Enforce nonnegativity of a converged Perron vector.

    Entries below -1e-12 mean the iteration converged to the wrong vector or
    the operator lost its sign structure; tiny negative rounding dust is
    clipped and the count renormalized.
    """
    if v.min() < -1e-12:
        raise PositivityViolationError(
            "%s has negative entries down to %.3e after convergence; "
            "the scheme is misconfigured" % (what, float(v.min())))
    v = np.maximum(v, 0.0)
    return v / (v @ h)


def _v0_loss_rate(coeffs: CoefficientSet, grid: SizeGrid) -> float:
    """Loss rate at zero monomer level, where transport vanishes.

    The generator is then triangular, so its principal eigenvalue is read
    off the diagonal: -min(decay + effective splitting).  For constant
    decay this is exactly decay0 (splitting is disabled in the smallest
    cell), which is also what integrating the eigen relation gives.
    """
    _, frag, decay = eval_coefficients(coeffs, grid)
    frag_eff = frag.copy()
    frag_eff[0] = 0.0
    return float(np.min(decay + frag_eff))


def principal_eigenpair(coeffs: CoefficientSet, grid: SizeGrid, v: float,
                        tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER,
                        method: str = "auto") -> EigenSolution:
    """Loss rate and nonnegative size profile at monomer level v.

    method: "auto" runs inverse iteration and falls back to the dense
    decomposition for small operators if it stalls; "iterative" and
    "dense" force one path.

    At v = 0 the transport term vanishes and the profile degenerates to the
    smallest sizes; the loss rate is still well defined and is returned
    with u_vec = None and degenerate = True.
    """
    if v < 0.0:
        raise ValueError("monomer level must be nonnegative, got %g" % v)
    if v == 0.0:
        return EigenSolution(v=0.0, lambda_eig=_v0_loss_rate(coeffs, grid),
                             u_vec=None, phi_vec=None, residual=0.0,
                             iterations=0, grid=grid, degenerate=True,
                             method="v0-diagonal")
    op = assemble(coeffs, grid, v)
    if method == "dense":
        nu, vec, r = _dense_principal(op.matrix, grid.widths)
        vec = _finalize_vector(vec, grid.widths, "eigenvector")
        return EigenSolution(v=v, lambda_eig=-nu, u_vec=vec, phi_vec=None,
                             residual=r, iterations=1, grid=grid, method="dense")
    try:
        nu, vec, r, log, it = _principal_on_matrix(op.matrix, grid.widths,
                                                   tol=tol, max_iter=max_iter)
    except EigenConvergenceError:
        if method == "iterative" or grid.n > DENSE_FALLBACK_MAX_N:
            raise
        nu, vec, r = _dense_principal(op.matrix, grid.widths)
        vec = _finalize_vector(vec, grid.widths, "eigenvector")
        return EigenSolution(v=v, lambda_eig=-nu, u_vec=vec, phi_vec=None,
                             residual=r, iterations=max_iter, grid=grid,
                             method="dense-fallback")
    vec = _finalize_vector(vec, grid.widths, "eigenvector")
    return EigenSolution(v=v, lambda_eig=-nu, u_vec=vec, phi_vec=None,
                         residual=r, iterations=it, grid=grid,
                         residual_log=log)


@dataclass(frozen=True)
class MomentEstimates:
    """Loss rate recovered from the two integral identities, kept separate.

    by_number comes from integrating the eigen relation (count balance):
    loss = <decay - splitting, u> / <1, u>.  by_mass comes from weighting
    by size (mass balance): loss = (<x*decay, u> - v*<conv, u>) / <x, u>.
    Each should match the solver eigenvalue up to the corresponding
    truncation flux, reported alongside.  mean_size = <x, u>/<1, u> is
    logged for inspection; it is not asserted against any closed form.
    """

    by_number: float
    by_mass: float
    mean_size: float
    count_flux: float
    mass_flux: float


def eigenvalue_from_moments(solution: EigenSolution, coeffs: CoefficientSet) -> MomentEstimates:
    """Recompute the loss rate from the converged profile via both balances.

    Uses the effective splitting rate the operator actually applies
    (disabled in the smallest cell), so the only defect left in each route
    is the outflow flux at xmax, returned for use as a tolerance bound.
    """
    if solution.u_vec is None:
        raise ValueError("solution has no eigenvector (degenerate v=0 solve)")
    grid = solution.grid
    u = solution.u_vec
    x, h = grid.centers, grid.widths
    conv, frag, decay = eval_coefficients(coeffs, grid)
    frag_eff = frag.copy()
    frag_eff[0] = 0.0  # matches assembly: no admissible destination cell

    count = float(u @ h)
    mass = float((x * u) @ h)
    v = solution.v
    count_flux = v * conv[-1] * u[-1]
    mass_flux = v * (x[-1] + h[-1]) * conv[-1] * u[-1]
    by_number = float(((decay - frag_eff) * u) @ h) / count
    by_mass = (float((x * decay * u) @ h) - v * float((conv * u) @ h)) / mass
    return MomentEstimates(by_number=by_number, by_mass=by_mass,
                           mean_size=mass / count,
                           count_flux=float(count_flux) / count,
                           mass_flux=float(mass_flux) / mass)


def adjoint_eigenpair(coeffs: CoefficientSet, grid: SizeGrid, v: float,
                      tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> EigenSolution:
    """Adjoint weight and its loss rate at monomer level v.

    The adjoint matrix shares the primal spectrum, so lambda_eig here must
    match the primal solve to rounding.  phi_vec is strictly positive,
    scaled so the linear extrapolation through the first two cells hits 1
    at the minimal size.
    """
    if v < 0.0:
        raise ValueError("monomer level must be nonnegative, got %g" % v)
    if v == 0.0:
        raise ValueError("adjoint weight is not defined at zero monomer level "
                         "(degenerate transport)")
    adj = assemble_adjoint(coeffs, grid, v)
    nu, vec, r, log, it = _principal_on_matrix(adj.matrix, grid.widths,
                                               tol=tol, max_iter=max_iter)
    if vec.min() <= 0.0:
        # Perron vector of an irreducible Metzler matrix is strictly positive;
        # rounding can only graze zero in the far tail
        if vec.min() < -1e-12:
            raise PositivityViolationError(
                "adjoint weight has negative entries down to %.3e" % float(vec.min()))
        vec = np.maximum(vec, 1e-300)
    x = grid.centers
    # extrapolate to x0 through the first two cell centers
    phi0 = vec[0] + (grid.x0 - x[0]) * (vec[1] - vec[0]) / (x[1] - x[0])
    if phi0 <= 0.0:
        raise PositivityViolationError(
            "adjoint weight extrapolates to %.3e at the minimal size" % float(phi0))
    vec = vec / phi0
    return EigenSolution(v=v, lambda_eig=-nu, u_vec=None, phi_vec=vec,
                         residual=r, iterations=it, grid=grid,
                         phi_normalization="phi(x0)=1", residual_log=log)


@dataclass(frozen=True)
class ScanResult:
    """Loss rate across a ladder of monomer levels, plus structure verdicts."""

    v_values: np.ndarray
    lambda_values: np.ndarray
    decreasing: bool
    lambda0_minus_decay0: Optional[float]
    sign_at_largest: int
    solutions: list = field(repr=False, default_factory=list)

    @property
    def growth_rates(self) -> np.ndarray:
        return -self.lambda_values


def scan_lambda(coeffs: CoefficientSet, grid: SizeGrid,
                v_list: Sequence[float], tol: float = DEFAULT_TOL,
                keep_solutions: bool = False) -> ScanResult:
    """Evaluate the loss rate on a strictly increasing ladder of levels.

    The verdict ``decreasing`` certifies strict decrease with a 1e-10
    tolerance band.  When decay is constant the zero-level loss rate minus
    that constant is reported (it should vanish identically) and the sign
    of the loss rate at the largest level probes eventual decay of the
    scan.  Solver failures are re-raised naming the offending level.
    """
    v_arr = np.asarray(list(v_list), dtype=float)
    if v_arr.size < 1:
        raise ValueError("empty level list")
    if np.any(np.diff(v_arr) <= 0.0) or v_arr[0] < 0.0:
        raise ValueError("levels must be strictly increasing and nonnegative")
    # one assembly of the level-independent parts, reused across the ladder
    T, B, _ = transport_reaction_parts(coeffs, grid)
    lams = np.empty_like(v_arr)
    sols: list = []
    for i, v in enumerate(v_arr):
        if v == 0.0:
            lams[i] = _v0_loss_rate(coeffs, grid)
            if keep_solutions:
                sols.append(EigenSolution(v=0.0, lambda_eig=lams[i], u_vec=None,
                                          phi_vec=None, residual=0.0, iterations=0,
                                          grid=grid, degenerate=True,
                                          method="v0-diagonal"))
            continue
        try:
            nu, vec, r, log, it = _principal_on_matrix(v * T + B, grid.widths, tol=tol)
        except EigenConvergenceError as exc:
            raise EigenConvergenceError(
                "scan failed at level v=%g: %s" % (v, exc),
                last_residual=exc.last_residual) from exc
        lams[i] = -nu
        if keep_solutions:
            vec = _finalize_vector(vec, grid.widths, "eigenvector")
            sols.append(EigenSolution(v=float(v), lambda_eig=float(-nu),
                                      u_vec=vec, phi_vec=None, residual=r,
                                      iterations=it, grid=grid, residual_log=log))
    decreasing = bool(np.all(np.diff(lams) < 1e-10))
    l0md = None
    if isinstance(coeffs.decay, Constant):
        l0md = _v0_loss_rate(coeffs, grid) - coeffs.decay.value
    sign = int(np.sign(lams[-1]))
    return ScanResult(v_values=v_arr, lambda_values=lams, decreasing=decreasing,
                      lambda0_minus_decay0=l0md, sign_at_largest=sign,
                      solutions=sols)


@dataclass(frozen=True)
class HypothesisConstants:
    """Sampled bounds relating conversion speed to the adjoint weight.

    k1 bounds |conv * phi'| / phi, k2 bounds conv/phi from above, k_lower
    from below.  The primary values are taken over the trusted window
    [x0, window_fraction*xmax]: the discrete adjoint develops an outflow
    boundary layer near xmax whose spurious gradients would otherwise
    dominate k1.  Full-grid values are reported alongside for honesty.
    k_lower shrinks as xmax grows whenever phi is unbounded, so it carries
    a domain-dependence flag rather than a clean limit.
    """

    k1: float
    k2: float
    k_lower: float
    window_fraction: float
    k1_full_grid: float
    k2_full_grid: float
    k_lower_full_grid: float
    k_lower_domain_dependent: bool
    v: float


def hypothesis_constants(coeffs: CoefficientSet, grid: SizeGrid, v: float,
                         window_fraction: float = 0.8) -> HypothesisConstants:
    """Estimate the comparison constants between conversion and adjoint weight.

    Solves the adjoint at level v, differentiates the weight by centered
    differences, and takes sup/inf of the three ratios on the trusted
    window (see HypothesisConstants).
    """
    sol = adjoint_eigenpair(coeffs, grid, v)
    phi = sol.phi_vec
    if phi is None or phi.min() <= 0.0:
        raise PositivityViolationError("adjoint weight must be strictly positive")
    x = grid.centers
    conv, _, _ = eval_coefficients(coeffs, grid)
    dphi = np.gradient(phi, x)  # centered interior, one-sided ends
    ratio1 = np.abs(conv * dphi) / phi
    ratio2 = conv / phi
    win = x <= grid.x0 + window_fraction * (grid.xmax - grid.x0)
    return HypothesisConstants(
        k1=float(ratio1[win].max()), k2=float(ratio2[win].max()),
        k_lower=float(ratio2[win].min()), window_fraction=window_fraction,
        k1_full_grid=float(ratio1.max()), k2_full_grid=float(ratio2.max()),
        k_lower_full_grid=float(ratio2.min()),
        k_lower_domain_dependent=True, v=float(v))
