"""Complex support vector regression with an RBF kernel and the epsilon-Huber cost.

The dual couples the four multiplier vectors only through
``psi = (a_R - a_R*) + j (a_I - a_I*)``.  Because the Gram matrix is real,
the quadratic form splits into independent real and imaginary problems::

    max_u  -1/2 u^T (G + gamma I) u + u^T y - eps * ||u||_1,   -C <= u <= C

with ``u = a - a*`` and ``min(a, a*) = 0`` at any optimum.  Both halves share
the same matrix, so a whole frame of OFDM symbols is solved as one batch.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

logger = logging.getLogger(__name__)

#: Semismooth Newton steps tried before switching to the primal active-set method.
NEWTON_MAX_STEPS = 8
#: Gradient step used to predict active sets, ``v = u + NEWTON_STEP * grad``.
NEWTON_STEP = 10.0


#: Default RBF width as a multiple of the pilot spacing.
SIGMA_PER_PILOT_SPACING = 2.0


@dataclass(frozen=True)
class SvrHyperparams:
    """epsilon-Huber cost and RBF kernel parameters.

    ``kernel_sigma`` is in subcarrier-index units.  ``max_iterations`` bounds
    coordinate updates (coordinate ascent) or Newton steps (active set);
    ``None`` means ``10**4 * n_pilots``.
    """

    epsilon: float = 1e-3
    gamma: float = 1e-2
    c: float = 1e2
    kernel_sigma: float = 12.0
    solver_tolerance: float = 1e-8
    max_iterations: int | None = None
    estimate_bias: bool = False

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not self.c > 0:
            raise ValueError("c must be > 0")
        if not self.kernel_sigma > 0:
            raise ValueError("kernel_sigma must be > 0")
        if not self.solver_tolerance > 0:
            raise ValueError("solver_tolerance must be > 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    @property
    def e_c(self) -> float:
        """Residual magnitude where the cost turns from quadratic to linear."""
        return self.epsilon + self.gamma * self.c

    def iteration_budget(self, n_pilots: int) -> int:
        return self.max_iterations if self.max_iterations is not None else 10**4 * n_pilots

    @classmethod
    def for_pilot_spacing(cls, pilot_spacing: int, **kwargs) -> "SvrHyperparams":
        kwargs.setdefault("kernel_sigma", SIGMA_PER_PILOT_SPACING * pilot_spacing)
        return cls(**kwargs)


@dataclass(frozen=True)
class PilotObservations:
    positions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        positions = np.asarray(self.positions)
        values = np.asarray(self.values, dtype=complex)
        if positions.ndim != 1 or positions.shape != values.shape:
            raise ValueError("positions and values must be 1-D and of equal length")
        if positions.size < 2:
            raise ValueError("at least two pilots are required")
        if np.any(np.diff(positions) <= 0):
            raise ValueError("pilot positions must be strictly increasing")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "values", values)


@dataclass
class DualSolution:
    psi: np.ndarray
    bias: complex
    alpha_r: np.ndarray
    alpha_r_star: np.ndarray
    alpha_i: np.ndarray
    alpha_i_star: np.ndarray
    iterations_used: int
    final_objective: float
    kkt_residual: float = 0.0
    method: str = "active-set"

    @property
    def n_support(self) -> int:
        """Number of pilots with at least one nonzero multiplier."""
        return int(np.count_nonzero(self.psi))


class SolverError(RuntimeError):
    """Raised when the dual solver misses its tolerance within the iteration budget."""

    def __init__(self, message: str, solution: DualSolution, residual: float, symbol_index: int | None = None):
        super().__init__(message)
        self.solution = solution
        self.residual = residual
        self.symbol_index = symbol_index


# --- kernel and cost -----------------------------------------------------

def rbf_kernel(u, v, sigma: float):
    """``exp(-(u - v)**2 / (2 sigma**2))``, broadcasting over arrays."""
    if not sigma > 0:
        raise ValueError(f"kernel sigma must be > 0, got {sigma}")
    d = np.subtract(u, v, dtype=float)
    return np.exp(-(d * d) / (2.0 * sigma * sigma))


def gram_matrix(positions, sigma: float) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    if np.unique(positions).size != positions.size:
        raise ValueError("pilot positions must be distinct")
    return rbf_kernel(positions[:, None], positions[None, :], sigma)


def epsilon_huber(x, params: SvrHyperparams):
    """Three-zone cost of a real residual (elementwise)."""
    a = np.abs(np.asarray(x, dtype=float))
    eps, gamma, c = params.epsilon, params.gamma, params.c
    quad = (a - eps) ** 2 / (2.0 * gamma)
    lin = c * (a - eps) - 0.5 * gamma * c * c
    return np.where(a <= eps, 0.0, np.where(a <= params.e_c, quad, lin))


def epsilon_huber_cost(residual, params: SvrHyperparams):
    """Cost of a complex residual: real and imaginary parts are charged separately."""
    residual = np.asarray(residual, dtype=complex)
    return epsilon_huber(residual.real, params) + epsilon_huber(residual.imag, params)


def dual_objective(
    psi, y, gram: np.ndarray, params: SvrHyperparams, alpha_sum: float | None = None
) -> float:
    """Dual functional value.

    ``alpha_sum`` is the total of all four multiplier vectors; by default it
    is ``||Re psi||_1 + ||Im psi||_1``, which holds under complementarity.
    """
    psi = np.asarray(psi, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if alpha_sum is None:
        alpha_sum = np.abs(psi.real).sum() + np.abs(psi.imag).sum()
    quad = np.real(np.conj(psi) @ (gram @ psi)) + params.gamma * np.vdot(psi, psi).real
    return float(-0.5 * quad + np.real(np.vdot(psi, y)) - params.epsilon * alpha_sum)


def primal_objective(psi, y, gram: np.ndarray, params: SvrHyperparams, bias: complex = 0.0) -> float:
    """Regularized cost ``1/2 ||w||^2 + sum L(e_m)`` with ``w`` expanded on the pilots."""
    psi = np.asarray(psi, dtype=complex)
    w_norm2 = np.real(np.conj(psi) @ (gram @ psi))
    residual = np.asarray(y, dtype=complex) - gram @ psi - bias
    return float(0.5 * w_norm2 + epsilon_huber_cost(residual, params).sum())


def kkt_residual(u: np.ndarray, grad: np.ndarray, eps: float, c: float) -> np.ndarray:
    """Per-coordinate KKT violation of the real box/l1 problem (gradient units).

    ``u`` and ``grad`` may be 2-D with one problem per column; returns the
    column-wise maximum.
    """
    viol = np.where(
        u == 0,
        np.maximum(np.abs(grad) - eps, 0.0),
        np.where(
            u >= c,
            np.maximum(eps - grad, 0.0),
            np.where(u <= -c, np.maximum(grad + eps, 0.0), np.abs(grad - eps * np.sign(u))),
        ),
    )
    return viol.max(axis=0)


# --- solvers -------------------------------------------------------------

def _classify(v: np.ndarray, eps: float, c: float, t: float) -> np.ndarray:
    """Predicted active sets from ``v = u + t * grad``: 0 zero, +-1 free, +-2 at the box."""
    code = np.zeros(v.shape, dtype=np.int8)
    code[v > t * eps] = 1
    code[v < -t * eps] = -1
    code[v >= c + t * eps] = 2
    code[v <= -c - t * eps] = -2
    return code


def _newton_step(a: np.ndarray, y: np.ndarray, code: np.ndarray, eps: float, c: float) -> np.ndarray:
    """Solve for the free coordinates given one active-set pattern shared by all columns."""
    u = np.zeros(y.shape)
    pattern = code[:, 0]
    u[pattern == 2] = c
    u[pattern == -2] = -c
    free = np.flatnonzero(np.abs(pattern) == 1)
    if free.size:
        bound = np.flatnonzero(np.abs(pattern) == 2)
        rhs = y[free] - eps * pattern[free, None]
        if bound.size:
            rhs -= a[np.ix_(free, bound)] @ u[bound]
        u[free] = np.linalg.solve(a[np.ix_(free, free)], rhs)
    return u


def _active_set(a: np.ndarray, y: np.ndarray, eps: float, c: float, max_steps: int):
    """Semismooth Newton / primal-dual active set iteration on many columns at once.

    Returns ``(u, steps, converged)``; a column converges when its predicted
    active set repeats, which is exactly the KKT system of the problem.  The
    iteration can cycle on ill-conditioned Gram matrices, hence the short cap.
    """
    n, m = y.shape
    u = np.zeros((n, m))
    prev = np.full((n, m), 127, dtype=np.int8)
    steps = np.zeros(m, dtype=np.int64)
    converged = np.zeros(m, dtype=bool)
    todo = np.arange(m)
    for _ in range(max_steps):
        v = u[:, todo] + NEWTON_STEP * (y[:, todo] - a @ u[:, todo])
        code = _classify(v, eps, c, NEWTON_STEP)
        done = np.all(code == prev[:, todo], axis=0)
        converged[todo[done]] = True
        todo, code = todo[~done], code[:, ~done]
        if todo.size == 0:
            break
        prev[:, todo] = code
        steps[todo] += 1
        patterns, inverse = np.unique(code.T, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        for g in range(patterns.shape[0]):
            cols = todo[inverse == g]
            u[:, cols] = _newton_step(a, y[:, cols], code[:, inverse == g], eps, c)
    return u, steps, converged


def _primal_active_set(a, y, eps, c, u0, tol, max_steps):
    """Feasible active-set method; finite termination for positive definite ``a``.

    Each coordinate is either pinned to a breakpoint (-C, 0 or C) or free
    inside one sign region, where the objective is a smooth quadratic.  A
    step moves towards the minimizer on the current working set and pins
    the first coordinate that would leave its region; at a working-set
    optimum the most violating pinned coordinate is released.
    """
    n = y.size
    u = np.clip(u0, -c, c).astype(float)
    u[np.abs(u) < 1e-300] = 0.0
    sign = np.sign(u)
    free = (u != 0) & (np.abs(u) < c)
    steps = 0
    while steps < max_steps:
        steps += 1
        f = np.flatnonzero(free)
        if f.size:
            b = np.flatnonzero(~free)
            rhs = y[f] - eps * sign[f]
            if b.size:
                rhs -= a[np.ix_(f, b)] @ u[b]
            target = np.linalg.solve(a[np.ix_(f, f)], rhs)
            d = target - u[f]
            # distance to the region edges 0 and sign * C along d
            s = sign[f]
            sd = s * d
            with np.errstate(divide="ignore", invalid="ignore"):
                limit = np.where(sd < 0, -(s * u[f]) / sd, np.where(sd > 0, (c - s * u[f]) / sd, np.inf))
            j = int(np.argmin(limit))
            if limit[j] < 1.0:
                u[f] += limit[j] * d
                hit = f[j]
                u[hit] = 0.0 if sd[j] < 0 else sign[hit] * c
                free[hit] = False
                continue
            u[f] = target
        grad = y - a @ u
        viol = np.zeros(n)
        pinned = ~free
        zero = pinned & (u == 0)
        viol[zero] = np.abs(grad[zero]) - eps
        top = pinned & (u == c)
        viol[top] = eps - grad[top]
        bottom = pinned & (u == -c)
        viol[bottom] = grad[bottom] + eps
        i = int(np.argmax(viol))
        if viol[i] <= 0.1 * tol:
            break
        free[i] = True
        if u[i] == 0:
            sign[i] = 1.0 if grad[i] > 0 else -1.0
    grad = y - a @ u
    return u, steps, float(kkt_residual(u[:, None], grad[:, None], eps, c)[0])


def _objective(a: np.ndarray, y: np.ndarray, u: np.ndarray, eps: float) -> float:
    return float(-0.5 * u @ (a @ u) + u @ y - eps * np.abs(u).sum())


def _coordinate_ascent(a, y, eps, c, u0, tol, max_updates, trace=None):
    """Cyclic exact coordinate maximization, each update clipped to the box.

    Returns ``(u, updates, residual)``; ``trace`` collects the objective
    after every sweep.
    """
    n = y.size
    u = np.clip(u0, -c, c).astype(float)
    diag = np.diag(a).copy()
    grad = y - a @ u
    updates = 0
    residual = float(kkt_residual(u[:, None], grad[:, None], eps, c)[0])
    while residual > tol and updates < max_updates:
        for i in range(n):
            r = grad[i] + diag[i] * u[i]
            step = max(abs(r) - eps, 0.0) / diag[i]
            new = min(step, c) * (1.0 if r > 0 else -1.0)
            delta = new - u[i]
            if delta != 0.0:
                grad -= a[:, i] * delta
                u[i] = new
            updates += 1
            if updates >= max_updates:
                break
        grad = y - a @ u
        residual = float(kkt_residual(u[:, None], grad[:, None], eps, c)[0])
        if trace is not None:
            trace.append(_objective(a, y, u, eps))
    return u, updates, residual


def _solve_real(a, y, params: SvrHyperparams, method: str):
    """Solve every column of the real matrix ``y``; returns u, iterations, residuals."""
    eps, c, tol = params.epsilon, params.c, params.solver_tolerance
    n, m = y.shape
    budget = params.iteration_budget(n)
    if method == "active-set":
        u, steps, converged = _active_set(a, y, eps, c, min(NEWTON_MAX_STEPS, budget))
        residual = kkt_residual(u, y - a @ u, eps, c)
        converged &= residual <= tol
    elif method == "coordinate":
        u = np.zeros((n, m))
        steps = np.zeros(m, dtype=np.int64)
        converged = np.zeros(m, dtype=bool)
        residual = np.full(m, np.inf)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    for j in np.flatnonzero(~converged):
        if method == "active-set":
            logger.debug("semismooth Newton did not settle on column %d; switching to primal active set", j)
            u[:, j], used, residual[j] = _primal_active_set(a, y[:, j], eps, c, u[:, j], tol, budget)
            steps[j] += used
            if residual[j] <= tol:
                continue
        u[:, j], used, residual[j] = _coordinate_ascent(a, y[:, j], eps, c, u[:, j], tol, budget)
        steps[j] += used
    return u, steps, residual


def _estimate_bias(residual: np.ndarray, params: SvrHyperparams) -> complex:
    """Mean residual over pilots sitting in the quadratic zone, per part."""
    parts = []
    for r in (residual.real, residual.imag):
        zone = (np.abs(r) > params.epsilon) & (np.abs(r) < params.e_c)
        parts.append(float(r[zone].mean()) if zone.any() else 0.0)
    return complex(parts[0], parts[1])


def solve_dual_batch(gram: np.ndarray, values, params: SvrHyperparams, method: str = "active-set") -> list[DualSolution]:
    """Solve one dual problem per row of ``values`` (shape ``(n_problems, n_pilots)``).

    Raises :class:`SolverError` for the first row whose KKT residual stays
    above ``params.solver_tolerance``; ``symbol_index`` carries that row.
    """
    values = np.atleast_2d(np.asarray(values, dtype=complex))
    n_rows, n = values.shape
    if gram.shape != (n, n):
        raise ValueError(f"Gram matrix shape {gram.shape} does not match {n} pilots")
    a = gram + params.gamma * np.eye(n)
    y = np.concatenate([values.real.T, values.imag.T], axis=1)
    u, steps, residual = _solve_real(a, y, params, method)
    u_r, u_i = u[:, :n_rows], u[:, n_rows:]
    solutions = []
    for row in range(n_rows):
        psi = u_r[:, row] + 1j * u_i[:, row]
        res = float(max(residual[row], residual[n_rows + row]))
        bias = 0j
        if params.estimate_bias:
            bias = _estimate_bias(values[row] - gram @ psi, params)
        sol = DualSolution(
            psi=psi,
            bias=bias,
            alpha_r=np.maximum(u_r[:, row], 0.0),
            alpha_r_star=np.maximum(-u_r[:, row], 0.0),
            alpha_i=np.maximum(u_i[:, row], 0.0),
            alpha_i_star=np.maximum(-u_i[:, row], 0.0),
            iterations_used=int(max(steps[row], steps[n_rows + row])),
            final_objective=dual_objective(psi, values[row], gram, params),
            kkt_residual=res,
            method=method,
        )
        if res > params.solver_tolerance:
            raise SolverError(
                f"dual solver stopped with KKT residual {res:.3g} > {params.solver_tolerance:g}",
                sol, res, symbol_index=row,
            )
        solutions.append(sol)
    return solutions


def solve_dual(gram: np.ndarray, observations: PilotObservations, params: SvrHyperparams, method: str = "active-set") -> DualSolution:
    """Maximize the dual functional over the box ``0 <= alpha <= C``."""
    try:
        return solve_dual_batch(gram, observations.values[None, :], params, method)[0]
    except SolverError as err:
        err.symbol_index = None
        raise


def predict(solution: DualSolution, positions, query, sigma: float):
    """``H(k) = sum_m psi_m K(P_m, k) + b`` at one or many subcarriers."""
    positions = np.asarray(positions, dtype=float)
    q = np.asarray(query, dtype=float)
    k = rbf_kernel(q[..., None], positions, sigma)
    out = k @ solution.psi + solution.bias
    return complex(out) if q.ndim == 0 else out


def fit_predict(positions, values, query, params: SvrHyperparams, method: str = "active-set") -> np.ndarray:
    """Fit one dual per row of ``values`` and interpolate each at ``query``."""
    positions = np.asarray(positions)
    gram = gram_matrix(positions, params.kernel_sigma)
    solutions = solve_dual_batch(gram, values, params, method)
    kq = rbf_kernel(np.asarray(query, dtype=float)[:, None], positions.astype(float), params.kernel_sigma)
    psi = np.stack([s.psi for s in solutions])
    bias = np.array([s.bias for s in solutions])
    return psi @ kq.T + bias[:, None]


def grid_search(
    positions,
    values,
    grid: dict[str, list],
    base: SvrHyperparams | None = None,
    holdout_every: int = 4,
) -> tuple[SvrHyperparams, dict]:
    """Pick hyperparameters by held-out pilot error.

    Every ``holdout_every``-th pilot (starting at index 1, so the edges stay
    in the training set) is withheld; the candidate with the smallest mean
    squared error on the withheld pilots wins.  ``grid`` maps field names of
    :class:`SvrHyperparams` to candidate lists.
    """
    base = base or SvrHyperparams()
    positions = np.asarray(positions)
    values = np.atleast_2d(np.asarray(values, dtype=complex))
    held = np.zeros(positions.size, dtype=bool)
    held[1:-1:holdout_every] = True
    if not held.any() or (~held).sum() < 2:
        raise ValueError("not enough pilots to hold out a validation subset")
    keys = list(grid)
    scores = {}
    best, best_score = base, math.inf
    for combo in itertools.product(*(grid[k] for k in keys)):
        cand = replace(base, **dict(zip(keys, combo)))
        est = fit_predict(positions[~held], values[:, ~held], positions[held], cand)
        score = float(np.mean(np.abs(est - values[:, held]) ** 2))
        scores[combo] = score
        if score < best_score:
            best, best_score = cand, score
    return best, scores
