"""Deterministic large-pool limit of the portfolio default rate.

In the infinite-pool limit, surviving firms feel past defaults only
through a deterministic contagion forcing q(t), the unique nonnegative
fixed point of a Volterra-type integral equation.  Because the underlying
dynamics are affine, every atom's survival probability has the exponential
closed form

    S_a(t) = exp( -b_a(t) lam0_a - integral_0^t b_a(t-r) (q(r) + alpha_a
             lambda_bar_a) dr ),

with b_a the Riccati trajectory of the atom's firm class, and the limit
default rate is F(t) = 1 - sum_a w_a S_a(t).  The fixed point is computed
by damped Picard iteration with trapezoid quadrature for all
time-convolutions on a shared uniform grid.

A second, independent route exists for single-class pools: iterate on F
itself in the integral equation

    F(t) = 1 - exp( -alpha lambda_bar int_0^t b - beta_c int_0^t F(r)
           b_dot(t-r) dr - b(t) lam0 ),

implemented by :func:`solve_homogeneous_f` and used as an oracle for the
general path.  The two discretizations agree at O(beta_c * dt^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMeasureError, NoConvergenceError, NonFiniteResultError
from .model import DiscreteTypeMeasure, FirmType, TimeGrid, Trajectory
from .quadrature import conv_simpson, conv_trapezoid, prefix_trapezoid
from .riccati import RiccatiSolution, solve_riccati

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

#: Below this surviving intensity mass the weighted contagion average is
#: considered undefined.
EXTINCTION_FLOOR = 1e-14


def riccati_for_measure(
    measure: DiscreteTypeMeasure, grid: TimeGrid, method: str = "closed_form"
) -> tuple[RiccatiSolution, ...]:
    """One Riccati solve per atom, all on the shared grid."""
    return tuple(solve_riccati(a.firm_type, grid, method) for a in measure.atoms)


class _AtomKernels:
    """Per-atom precomputation reused across Picard sweeps."""

    def __init__(self, measure, riccati, grid):
        if len(riccati) != len(measure.atoms):
            raise ValueError("need exactly one Riccati solution per atom")
        self.dt = grid.dt
        self.weight = np.array([a.weight for a in measure.atoms])
        self.beta_c = np.array([a.firm_type.beta_c for a in measure.atoms])
        self.lam0 = np.array([a.lambda_init for a in measure.atoms])
        self.force = np.array(
            [a.firm_type.alpha * a.firm_type.lambda_bar for a in measure.atoms]
        )
        self.b = []
        self.b_dot = []
        for atom, ric in zip(measure.atoms, riccati):
            if ric.grid != grid:
                raise ValueError("Riccati solutions must share the solver grid")
            if ric.firm_type != atom.firm_type:
                raise ValueError("Riccati solution does not match its atom")
            self.b.append(ric.b.values)
            self.b_dot.append(ric.b_dot.values)

    def exponents_and_slopes(self, q: np.ndarray, conv=conv_trapezoid):
        """Per atom: exponent E_a(t) and its time-slope D_a(t) given forcing q.

        The survival probability is exp(-E_a) and the surviving intensity
        mass is D_a * exp(-E_a).  ``conv`` selects the quadrature for the
        forcing convolutions (diagnostics pass the Simpson variant).
        """
        E = np.empty((len(self.b), q.shape[0]))
        D = np.empty_like(E)
        for i in range(len(self.b)):
            g = q + self.force[i]
            E[i] = self.b[i] * self.lam0[i] + conv(self.b[i], g, self.dt)
            D[i] = self.b_dot[i] * self.lam0[i] + conv(self.b_dot[i], g, self.dt)
        return E, D

    def apply_map(self, q: np.ndarray, conv=conv_trapezoid) -> np.ndarray:
        """One application of the fixed-point map to the forcing q."""
        E, D = self.exponents_and_slopes(q, conv)
        return (self.weight * self.beta_c) @ (D * np.exp(-E))


@dataclass(frozen=True)
class PicardResult:
    """Converged contagion forcing plus iteration metadata."""

    q: Trajectory
    iterations: int
    residual: float
    residual_history: tuple[float, ...]


def solve_q(
    measure: DiscreteTypeMeasure,
    riccati: tuple[RiccatiSolution, ...],
    grid: TimeGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    relaxation: float = 1.0,
) -> PicardResult:
    """Picard iteration for the contagion forcing, started from q = 0.

    Stops when the sup-norm change of one sweep is <= tol.  ``relaxation``
    in (0, 1] under-relaxes the update for pathological parameter sets;
    the default applies the map directly.

    Raises :class:`NoConvergenceError` after ``max_iter`` sweeps, and
    :class:`NonFiniteResultError` if a sweep produces non-finite values or
    values below -tol (the limit forcing is provably nonnegative, so
    anything materially negative is a bug, not round-off).
    """
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    if not 0.0 < relaxation <= 1.0:
        raise ValueError("relaxation must be in (0, 1]")
    kern = _AtomKernels(measure, riccati, grid)
    q = np.zeros(grid.n_points)
    history = []
    for iteration in range(1, max_iter + 1):
        q_new = kern.apply_map(q)
        if not np.all(np.isfinite(q_new)):
            raise NonFiniteResultError(
                f"fixed-point sweep {iteration} produced non-finite forcing"
            )
        if relaxation != 1.0:
            q_new = q + relaxation * (q_new - q)
        residual = float(np.max(np.abs(q_new - q)))
        history.append(residual)
        q = q_new
        if residual <= tol:
            break
    else:
        raise NoConvergenceError(max_iter, history[-1], tol)

    low = q.min()
    if low < -tol:
        raise NonFiniteResultError(
            f"contagion forcing reached {low:.3e}, below -tol; "
            "the nonnegative fixed point should not do that"
        )
    if low < 0.0:
        q = np.where(q < 0.0, 0.0, q)  # round-off only: values in (-tol, 0)
    return PicardResult(
        q=Trajectory(grid, q),
        iterations=iteration,
        residual=residual,
        residual_history=tuple(history),
    )


def compute_f(
    measure: DiscreteTypeMeasure,
    riccati: tuple[RiccatiSolution, ...],
    q: Trajectory,
) -> Trajectory:
    """Limit default rate F(t) = 1 - weighted sum of atom survival factors."""
    kern = _AtomKernels(measure, riccati, q.grid)
    E, _ = kern.exponents_and_slopes(q.values)
    f = 1.0 - kern.weight @ np.exp(-E)
    return Trajectory(q.grid, f)


def f_derivative(
    measure: DiscreteTypeMeasure,
    riccati: tuple[RiccatiSolution, ...],
    q: Trajectory,
) -> Trajectory:
    """dF/dt via the per-atom affine decomposition (no finite differences).

    Equals the first intensity moment of the surviving population in the
    limit: sum_a w_a D_a exp(-E_a).
    """
    kern = _AtomKernels(measure, riccati, q.grid)
    E, D = kern.exponents_and_slopes(q.values)
    return Trajectory(q.grid, kern.weight @ (D * np.exp(-E)))


def effective_contagion_weight(
    measure: DiscreteTypeMeasure,
    riccati: tuple[RiccatiSolution, ...],
    q: Trajectory,
    k: int,
) -> float:
    """Intensity-weighted average contagion sensitivity at grid index k.

    The average is over the *surviving* population in the limit, weighting
    each atom's sensitivity by its current intensity mass.  Lies between 0
    and the largest atom sensitivity.  Raises
    :class:`DegenerateMeasureError` when essentially no intensity mass
    survives.
    """
    kern = _AtomKernels(measure, riccati, q.grid)
    E, D = kern.exponents_and_slopes(q.values)
    masses = kern.weight * D[:, k] * np.exp(-E[:, k])
    denom = float(masses.sum())
    if denom <= EXTINCTION_FLOOR:
        raise DegenerateMeasureError(
            f"surviving intensity mass {denom:.3e} at grid index {k}"
        )
    return float((kern.beta_c @ masses) / denom)


def solve_homogeneous_f(
    firm_type: FirmType,
    lambda_init: float,
    grid: TimeGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "closed_form",
) -> Trajectory:
    """Single-class limit default rate via direct iteration on F.

    Independent of the contagion-forcing route: discretizes the
    homogeneous integral equation for F with the same trapezoid rule and
    iterates from F = 0.  With beta_c = 0 the equation has no
    self-reference and the first sweep already lands on the explicit
    contagion-free formula.
    """
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    ric = solve_riccati(firm_type, grid, method)
    b = ric.b.values
    b_dot = ric.b_dot.values
    dt = grid.dt
    base = firm_type.alpha * firm_type.lambda_bar * prefix_trapezoid(b, dt) + b * lambda_init
    f = np.zeros(grid.n_points)
    for iteration in range(1, max_iter + 1):
        f_new = 1.0 - np.exp(-base - firm_type.beta_c * conv_trapezoid(b_dot, f, dt))
        residual = float(np.max(np.abs(f_new - f)))
        f = f_new
        if residual <= tol:
            break
    else:
        raise NoConvergenceError(max_iter, residual, tol)
    return Trajectory(grid, f)


@dataclass(frozen=True)
class LimitSolution:
    """Everything the limit solver produces for one measure and grid."""

    measure: DiscreteTypeMeasure
    riccati: tuple[RiccatiSolution, ...]
    q: Trajectory
    f: Trajectory
    iterations: int
    residual: float
    residual_history: tuple[float, ...] = ()

    @property
    def grid(self) -> TimeGrid:
        return self.q.grid


def solve_limit(
    measure: DiscreteTypeMeasure,
    grid: TimeGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "closed_form",
    relaxation: float = 1.0,
) -> LimitSolution:
    """Full limit pipeline: per-atom Riccati, contagion fixed point, F."""
    riccati = riccati_for_measure(measure, grid, method)
    picard = solve_q(measure, riccati, grid, tol=tol, max_iter=max_iter,
                     relaxation=relaxation)
    f = compute_f(measure, riccati, picard.q)
    return LimitSolution(
        measure=measure,
        riccati=riccati,
        q=picard.q,
        f=f,
        iterations=picard.iterations,
        residual=picard.residual,
        residual_history=picard.residual_history,
    )


def contagion_identity_rhs(limit: LimitSolution) -> Trajectory:
    """Higher-order evaluation of the identity q = B * dF/dt.

    Recomputes the per-atom intensity masses with Simpson quadrature at
    the converged forcing; the product of the effective contagion weight
    and dF/dt then reduces to the sensitivity-weighted mass sum.  Because
    the evaluation does not share the solver's trapezoid error, the gap to
    the solved q measures discretization error rather than echoing the
    Picard residual.  Raises :class:`DegenerateMeasureError` if the
    surviving intensity mass is extinct anywhere on the grid.
    """
    kern = _AtomKernels(limit.measure, limit.riccati, limit.grid)
    E, D = kern.exponents_and_slopes(limit.q.values, conv=conv_simpson)
    masses = kern.weight[:, None] * D * np.exp(-E)
    denom = masses.sum(axis=0)
    if denom.min() <= EXTINCTION_FLOOR:
        k = int(np.argmax(denom <= EXTINCTION_FLOOR))
        raise DegenerateMeasureError(
            f"surviving intensity mass {denom[k]:.3e} at grid index {k}"
        )
    return Trajectory(limit.grid, kern.beta_c @ masses)
