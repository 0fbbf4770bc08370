"""Hilber-Hughes-Taylor alpha time stepping for M a + C v + K u = F.

Equilibrium is enforced at the shifted time t_{n+1+alpha}::

    M a_{n+1} + (1+alpha)(C v_{n+1} + K u_{n+1}) - alpha (C v_n + K u_n)
        = (1+alpha) F_{n+1} - alpha F_n

with Newmark updates, beta = (1-alpha)^2/4 and gamma = (1-2alpha)/2.
alpha = 0 is the average-acceleration rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import ValidationError
from .linsolve import SparseDirectSolver


@dataclass(frozen=True)
class HHTParameters:
    alpha: float
    dt: float

    def __post_init__(self):
        if not -1.0 / 3.0 - 1e-12 <= self.alpha <= 0.0:
            raise ValidationError(f"alpha {self.alpha} outside [-1/3, 0]")
        if not self.dt > 0:
            raise ValidationError(f"time step must be positive, got {self.dt}")

    @property
    def beta(self) -> float:
        return (1.0 - self.alpha) ** 2 / 4.0

    @property
    def gamma(self) -> float:
        return (1.0 - 2.0 * self.alpha) / 2.0


@dataclass
class TransientState:
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    step: int = 0
    time: float = 0.0

    @classmethod
    def zeros(cls, n: int) -> "TransientState":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))


def effective_matrix(M, C, K, p: HHTParameters):
    a1 = 1.0 + p.alpha
    return (M + a1 * p.gamma * p.dt * C + a1 * p.beta * p.dt**2 * K).tocsc()


def initial_acceleration(M, C, K, u, v, F0) -> np.ndarray:
    return SparseDirectSolver(M).solve(F0 - C @ v - K @ u)


def step_hht(state: TransientState, M, C, K, F_next, F_now, p: HHTParameters, solver=None) -> TransientState:
    """Advance one step; ``solver`` is a factorization of :func:`effective_matrix`."""
    if solver is None:
        solver = SparseDirectSolver(effective_matrix(M, C, K, p))
    a1, dt, b, g = 1.0 + p.alpha, p.dt, p.beta, p.gamma
    u, v, a = state.u, state.v, state.a
    u_pred = u + dt * v + dt * dt * (0.5 - b) * a
    v_pred = v + dt * (1.0 - g) * a
    rhs = a1 * F_next - p.alpha * F_now
    rhs = rhs - C @ (a1 * v_pred - p.alpha * v) - K @ (a1 * u_pred - p.alpha * u)
    a_new = solver.solve(rhs)
    return TransientState(
        u_pred + b * dt * dt * a_new,
        v_pred + g * dt * a_new,
        a_new,
        state.step + 1,
        state.time + dt,
    )


class HHTIntegrator:
    """Holds the matrices and a single factorization for a whole run."""

    def __init__(self, M, C, K, alpha: float, dt: float):
        self.M, self.C, self.K = (sp.csr_matrix(A) for A in (M, C, K))
        self.params = HHTParameters(alpha, dt)
        self.solver = SparseDirectSolver(effective_matrix(self.M, self.C, self.K, self.params))

    def step(self, state: TransientState, F_next, F_now) -> TransientState:
        return step_hht(state, self.M, self.C, self.K, F_next, F_now, self.params, self.solver)

    def energy(self, state: TransientState) -> float:
        return 0.5 * float(state.v @ (self.M @ state.v) + state.u @ (self.K @ state.u))
