"""Linear extraction and discrete-time Riccati solution for linear domains."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import dynamics
from .errors import NumericalError, ParameterError, SolverError, UnsupportedModelError
from .mjcf import CompiledModel, Integrator, JointType
from .physics import Physics

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12
DEFAULT_MAX_ITERATIONS = 10**6
SLOW_CONVERGENCE = 10**5
DEFAULT_CONTROL_COST = 0.1

Policy = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """
    Discrete-time system ``x' = A x + B u`` with stage cost ``x'Qx + u'Ru``.

    ``h`` is the time between two applications of ``A``.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    h: float

    def __post_init__(self) -> None:
        n, m = self.B.shape
        if self.A.shape != (n, n):
            raise ParameterError(f"A must be {n}x{n}, got {self.A.shape}")
        if self.Q.shape != (n, n) or self.R.shape != (m, m):
            raise ParameterError(
                f"Q must be {n}x{n} and R {m}x{m}, got {self.Q.shape} and {self.R.shape}"
            )
        if not np.allclose(self.Q, self.Q.T) or np.linalg.eigvalsh(self.Q).min() < -1e-12:
            raise ParameterError("Q must be symmetric positive semi-definite")
        if not np.allclose(self.R, self.R.T) or np.linalg.eigvalsh(self.R).min() <= 0:
            raise ParameterError("R must be symmetric positive definite")

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def control_dim(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Cost-to-go ``P`` and feedback gain ``K`` (``u = -K x``)."""

    P: np.ndarray
    K: np.ndarray
    iterations: int
    residual: float

    def value(self, x: np.ndarray) -> float:
        """Optimal cost-to-go ``x'Px`` from state ``x``."""
        x = np.asarray(x, dtype=float)
        return float(x @ self.P @ x)


def default_costs(nv: int, nu: int, control_cost: float = DEFAULT_CONTROL_COST):
    """Unit cost on positions, none on velocities, ``control_cost`` on controls."""
    state_cost = np.diag(np.concatenate([np.ones(nv), np.zeros(nv)]))
    return state_cost, control_cost * np.eye(nu)


def _check_linear(model: CompiledModel) -> None:
    if model.integrator is not Integrator.SEMI_IMPLICIT_EULER:
        raise UnsupportedModelError("linearize requires the semi-implicit Euler integrator")
    if model.drag:
        raise UnsupportedModelError("Fluid drag is nonlinear")
    hinges = [
        model.names["joint"][j] for j, kind in enumerate(model.jnt_type) if kind is JointType.HINGE
    ]
    if hinges:
        raise UnsupportedModelError(f"Hinge joints are nonlinear: {', '.join(hinges)}")


def linearize(
    model: CompiledModel,
    h: Optional[float] = None,
    n_sub_steps: int = 1,
    state_cost: Optional[np.ndarray] = None,
    control_cost: Optional[np.ndarray] = None,
) -> LinearSystem:
    """
    Exact transition matrices of a model whose dynamics are linear.

    With slide joints only, no drag and no gravity along the slides, the
    mass matrix is constant and one semi-implicit Euler step is exactly
    linear in ``(q, v, u)``.

    Args:
        model: A slide-only compiled model
        h: Physics timestep (the model's when None)
        n_sub_steps: Physics steps composed into one control step
        state_cost: ``Q`` over ``(q, v)``; defaults to unit position cost
        control_cost: ``R``; defaults to ``0.1 * I``

    Returns:
        The ``LinearSystem`` of one control step

    Raises:
        UnsupportedModelError: If the model is not exactly linear
    """
    _check_linear(model)
    if n_sub_steps < 1:
        raise ParameterError(f"n_sub_steps must be positive, got {n_sub_steps}")
    h = model.timestep if h is None else float(h)
    nv, nu = model.nv, model.nu

    kinematics = dynamics.forward_kinematics(model, np.zeros(model.nq))
    if np.any(np.abs(kinematics.cdof[:, 3:] @ model.gravity) > 0):
        raise UnsupportedModelError("Gravity along a slide makes the dynamics affine")
    M = dynamics.mass_matrix(model, kinematics)
    try:
        factor = cho_factor(M)
    except LinAlgError as e:
        raise NumericalError(f"Mass matrix is not positive definite: {e}") from e
    stiffness = cho_solve(factor, np.diag(model.dof_stiffness))
    damping = cho_solve(factor, np.diag(model.dof_damping))
    actuation = cho_solve(factor, model.actuator_moment)

    identity = np.eye(nv)
    velocity_row = np.hstack([-h * stiffness, identity - h * damping])
    position_row = np.hstack([identity, np.zeros((nv, nv))]) + h * velocity_row
    A = np.vstack([position_row, velocity_row])
    B = np.vstack([h * h * actuation, h * actuation])

    A_step, B_step = A, B
    for _ in range(n_sub_steps - 1):
        A, B = A_step @ A, A_step @ B + B_step

    default_q, default_r = default_costs(nv, nu)
    Q = default_q if state_cost is None else np.asarray(state_cost, dtype=float)
    R = default_r if control_cost is None else np.asarray(control_cost, dtype=float)
    return LinearSystem(A=A, B=B, Q=Q, R=R, h=h * n_sub_steps)


def finite_difference_system(
    physics: Physics,
    q: np.ndarray,
    v: np.ndarray,
    u: np.ndarray,
    n_sub_steps: int = 1,
    eps: float = 1e-6,
    state_cost: Optional[np.ndarray] = None,
    control_cost: Optional[np.ndarray] = None,
) -> LinearSystem:
    """
    Central-difference linearisation of the simulator about ``(q, v, u)``.

    Works for any model, including nonlinear ones; ``physics`` itself is
    left untouched.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    nx, nu = q.size + v.size, u.size
    x0 = np.concatenate([q, v])

    def transition(x: np.ndarray, control: np.ndarray) -> np.ndarray:
        sim = physics.copy()
        sim.set_state(x[: q.size], x[q.size:], control)
        sim.step(n_sub_steps)
        return sim.get_state()

    A = np.empty((nx, nx))
    for i in range(nx):
        dx = np.zeros(nx)
        dx[i] = eps
        A[:, i] = (transition(x0 + dx, u) - transition(x0 - dx, u)) / (2 * eps)
    B = np.empty((nx, nu))
    for i in range(nu):
        du = np.zeros(nu)
        du[i] = eps
        B[:, i] = (transition(x0, u + du) - transition(x0, u - du)) / (2 * eps)

    Q = np.eye(nx) if state_cost is None else np.asarray(state_cost, dtype=float)
    R = np.eye(nu) if control_cost is None else np.asarray(control_cost, dtype=float)
    return LinearSystem(A=A, B=B, Q=Q, R=R, h=physics.timestep * n_sub_steps)


def _gain(system: LinearSystem, P: np.ndarray) -> np.ndarray:
    BtP = system.B.T @ P
    try:
        factor = cho_factor(system.R + BtP @ system.B)
    except LinAlgError as e:
        raise NumericalError(f"R + B'PB is not positive definite: {e}") from e
    return cho_solve(factor, BtP @ system.A)


def bellman_residual(system: LinearSystem, P: np.ndarray) -> float:
    """Infinity norm of ``P - (Q + A'PA - A'PB (R + B'PB)^-1 B'PA)``."""
    A = system.A
    update = system.Q + A.T @ P @ (A - system.B @ _gain(system, P))
    return float(np.max(np.abs(P - update)))


def solve_dare(
    system: LinearSystem,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
) -> RiccatiSolution:
    """
    Solve the discrete algebraic Riccati equation by fixed-point iteration.

    Starting from ``P = Q``, iterate
    ``P <- Q + A'(P - PB (R + B'PB)^-1 B'P)A`` until the largest change is
    at most ``tol * max(1, |P|_inf)``.

    Args:
        system: The linear system and its costs
        tol: Relative convergence tolerance
        max_iter: Iteration budget

    Returns:
        The converged ``RiccatiSolution``

    Raises:
        SolverError: If the iteration has not converged after ``max_iter`` steps
    """
    A, B, Q = system.A, system.B, system.Q
    P = Q.copy()
    delta = np.inf
    for iteration in range(1, max_iter + 1):
        K = _gain(system, P)
        P_next = Q + A.T @ P @ (A - B @ K)
        P_next = 0.5 * (P_next + P_next.T)
        delta = float(np.max(np.abs(P_next - P)))
        P = P_next
        if not np.isfinite(delta):
            break
        if delta <= tol * max(1.0, float(np.max(np.abs(P)))):
            if iteration > SLOW_CONVERGENCE:
                logger.warning("Riccati iteration needed %d iterations", iteration)
            residual = bellman_residual(system, P)
            logger.debug("Riccati converged in %d iterations, residual %.3e", iteration, residual)
            return RiccatiSolution(P=P, K=_gain(system, P), iterations=iteration, residual=residual)

    logger.error("Riccati iteration failed to converge (last change %.3e)", delta)
    raise SolverError("Riccati iteration did not converge", residual=delta, iterations=max_iter)


def lqr_policy(solution: RiccatiSolution) -> Policy:
    """Stationary linear feedback ``u = -K x``."""
    K = solution.K.copy()

    def policy(x: np.ndarray) -> np.ndarray:
        return -K @ np.asarray(x, dtype=float)

    return policy


def closed_loop_spectral_radius(system: LinearSystem, solution: RiccatiSolution) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(system.A - system.B @ solution.K))))


def task_system(env) -> LinearSystem:
    """
    The ``LinearSystem`` of an LQR environment at its control rate.

    Raises:
        UnsupportedModelError: If the task does not define quadratic costs
    """
    cost_matrices = getattr(env.task, "cost_matrices", None)
    if cost_matrices is None:
        raise UnsupportedModelError(f"Task {type(env.task).__name__} has no quadratic cost")
    state_cost, control_cost = cost_matrices(env.physics)
    return linearize(
        env.physics.model,
        env.physics.timestep,
        env.n_sub_steps,
        state_cost=state_cost,
        control_cost=control_cost,
    )
