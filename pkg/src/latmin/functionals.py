"""Energy functionals for -Delta u + a(x)|u|^{p-2}u - b(x)|u|^{q-2}u = 0.

Exposes the split functionals of the constrained variational problem
(J1, J2), the full energy Phi with variable or constant coefficients, its
Gateaux gradient, and an l2 residual used as the finite-box surrogate for the
dual-norm smallness of Phi'.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .coefficients import CoefficientField
from .lattice import LatticeFunction, gradient_norm_sq, laplacian, lp_norm


@dataclass(frozen=True)
class ProblemParams:
    """Equation data (N, p, q, a, b) plus the constraint weight beta."""

    dim: int
    p: float
    q: float
    a: CoefficientField
    b: CoefficientField
    beta: float = 1.0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        if not (2 <= self.p < self.q < np.inf):
            raise ValueError(f"need 2 <= p < q < inf, got p={self.p}, q={self.q}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def a_const(self) -> float:
        if not self.a.is_constant:
            raise ValueError("operation requires a constant a coefficient")
        return self.a.limit

    def with_constant_b(self, b_value: float) -> "ProblemParams":
        return replace(self, b=CoefficientField.constant(b_value))

    def at_limits(self) -> "ProblemParams":
        """The constant-coefficient limit problem (a, b replaced by their limits)."""
        return replace(
            self,
            a=CoefficientField.constant(self.a.limit),
            b=CoefficientField.constant(self.b.limit),
        )


def _power(u_vals: np.ndarray, s: float) -> np.ndarray:
    """|u|^{s-2} u, with the s = 2 case exactly u (no 0**0 at the origin)."""
    if s == 2:
        return u_vals
    return np.abs(u_vals) ** (s - 2) * u_vals


def j1(u: LatticeFunction, params: ProblemParams) -> float:
    """(1/2)|grad u|_2^2 + (a/p)|u|_p^p, for constant a."""
    a = params.a_const
    return 0.5 * gradient_norm_sq(u) + (a / params.p) * lp_norm(u, params.p) ** params.p


def j2(u: LatticeFunction, params: ProblemParams) -> float:
    """beta * |u|_q^q."""
    return params.beta * lp_norm(u, params.q) ** params.q


def phi(u: LatticeFunction, params: ProblemParams) -> float:
    """The full energy; equals the constant-coefficient energy when a, b are constants."""
    av = params.a.values_on(u.box)
    bv = params.b.values_on(u.box)
    abs_u = np.abs(u.values)
    return float(
        0.5 * gradient_norm_sq(u)
        + np.sum(av * abs_u**params.p) / params.p
        - np.sum(bv * abs_u**params.q) / params.q
    )


def phi_bar(u: LatticeFunction, params: ProblemParams) -> float:
    """The energy of the limit equation, with a, b frozen at their limits."""
    return phi(u, params.at_limits())


def gateaux_gradient(u: LatticeFunction, params: ProblemParams) -> LatticeFunction:
    """g with g(x) = -Delta u + a(x)|u|^{p-2}u - b(x)|u|^{q-2}u on box sites.

    For box-supported test functions phi the pairing <Phi'(u), phi> equals
    sum g * phi exactly (discrete summation by parts).
    """
    av = params.a.values_on(u.box)
    bv = params.b.values_on(u.box)
    g = -laplacian(u).values + av * _power(u.values, params.p) - bv * _power(u.values, params.q)
    return LatticeFunction(u.box, g)


def gradient_pairing(u: LatticeFunction, params: ProblemParams, direction: LatticeFunction) -> float:
    """<Phi'(u), phi> for a box-supported direction phi."""
    u._check_same_box(direction)
    return float(np.dot(gateaux_gradient(u, params).values, direction.values))


def residual_norm(u: LatticeFunction, params: ProblemParams) -> float:
    """l2 norm of the Gateaux gradient over the box; 0 iff u solves the truncated equation."""
    return float(np.linalg.norm(gateaux_gradient(u, params).values))
