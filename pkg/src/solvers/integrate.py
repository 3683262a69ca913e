"""
Adaptive explicit integration of q' = f(q) with the embedded Runge-Kutta
pair of orders 2 and 3 (Bogacki-Shampine) from scipy.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from src.solvers import SolverError

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    times: np.ndarray                   # (T,)
    states: np.ndarray                  # (T, dim)
    stats: object | None = None         # CrossBeamStats when attached by the caller
    n_evaluations: int = 0
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def sample_times(t_end: float, sample_dt: float) -> np.ndarray:
    count = int(np.floor(t_end / sample_dt + 1e-9))
    times = np.arange(count + 1) * sample_dt
    if t_end - times[-1] > 1e-9 * t_end:
        times = np.append(times, t_end)
    return times


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    q0: np.ndarray,
    t_end: float,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-9,
    t_eval: np.ndarray | None = None,
    vectorized: bool = False,
    max_step: float = np.inf,
    first_step: float | None = None,
) -> Trajectory:
    """
    rhs takes the state only (autonomous systems). t_eval defaults to the
    start and end times; samples come from the pair's dense output.
    max_step and first_step pass through to the stepper.
    """
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    q0 = np.asarray(q0, dtype=float)
    if not np.all(np.isfinite(q0)):
        raise ValueError("initial state must be finite")
    if t_eval is None:
        t_eval = np.array([0.0, t_end])

    def ode(t, q):
        return rhs(q.T).T if vectorized and q.ndim == 2 else rhs(q)

    start = time.perf_counter()
    solution = solve_ivp(
        ode, (0.0, t_end), q0, method="RK23", t_eval=t_eval,
        rtol=rel_tol, atol=abs_tol, vectorized=vectorized,
        max_step=max_step, first_step=first_step,
    )
    elapsed = time.perf_counter() - start

    if solution.status == -1:
        reached = solution.t[-1] if len(solution.t) else 0.0
        raise SolverError(f"integration failed at t={reached:.6g}: {solution.message}")
    states = solution.y.T
    if not np.all(np.isfinite(states)):
        raise SolverError("integration produced non-finite states")

    logger.info(f"Integrated to t={t_end:g} with {solution.nfev} RHS evaluations in {elapsed:.2f}s")
    return Trajectory(times=solution.t, states=states, n_evaluations=solution.nfev, wall_time=elapsed)
