"""Dense Hermitian spectral calculus and the 2x2 Loewner determinant."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .scalar import (
    DomainError,
    ParamLike,
    ScalarEvalConfig,
    as_param,
    exp_phi,
    exp_phi_derivative,
    log_exp_phi,
    log_phi,
)

DIVDIFF_SWITCH = 1e-7


class DimensionError(ValueError):
    pass


def hermitian(A, tol: float = 1e-12) -> np.ndarray:
    """Validate ``A`` as a square Hermitian matrix and return its symmetrized complex copy."""
    M = np.array(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {M.shape}")
    scale = 1.0 + np.max(np.abs(M))
    if np.max(np.abs(M - M.conj().T)) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    return 0.5 * (M + M.conj().T)


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.conj().T

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Matrix with the same eigenvectors and the given eigenvalues."""
        return (self.vectors * values) @ self.vectors.conj().T


def eig_hermitian(A) -> EigenSystem:
    M = hermitian(A)
    w, V = np.linalg.eigh(M)
    return EigenSystem(w, V)


@dataclass(frozen=True)
class ScalarFunction:
    """A real function together with its derivative, for Loewner tests.

    ``lower`` is an open lower bound of the domain (None for all reals).
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lower: Optional[float] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.lower is not None and np.any(x <= self.lower):
            raise DomainError(f"{self.name} is defined for arguments > {self.lower}")
        return self.f(x)

    def derivative(self, x):
        if self.df is None:
            raise ValueError(f"{self.name} has no derivative attached")
        return self.df(np.asarray(x, dtype=float))


FnLike = Union[ScalarFunction, Callable[[np.ndarray], np.ndarray]]


def apply_fn(A, fn: FnLike, eig: Optional[EigenSystem] = None) -> np.ndarray:
    """``U fn(Lambda) U^dagger`` for Hermitian ``A``."""
    es = eig if eig is not None else eig_hermitian(A)
    vals = np.asarray(fn(es.eigenvalues), dtype=float)
    if vals.shape != es.eigenvalues.shape or not np.all(np.isfinite(vals)):
        raise DomainError("function is undefined on part of the spectrum")
    return es.apply(vals)


def min_eig(A) -> float:
    return float(np.linalg.eigvalsh(hermitian(A, tol=1e-8))[0])


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(hermitian(A, tol=1e-8)))))


def psd_order_leq(A, B, tol: float = 1e-10) -> bool:
    """True iff ``A <= B`` in the positive-semidefinite order, up to a relative tolerance."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    w = np.linalg.eigvalsh(hermitian(B - A, tol=1e-8))
    radius = float(np.max(np.abs(w)))
    return bool(w[0] >= -tol * (1.0 + radius))


def sqrtm_psd(A) -> np.ndarray:
    es = eig_hermitian(A)
    return es.apply(np.sqrt(np.clip(es.eigenvalues, 0.0, None)))


@dataclass(frozen=True)
class LoewnerPair:
    u: float
    v: float
    fprime_u: float
    fprime_v: float
    divided_difference: float
    determinant: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.fprime_u, self.divided_difference],
                         [self.divided_difference, self.fprime_v]])


def loewner2_det(fn: ScalarFunction, u: float, v: float,
                 switch: float = DIVDIFF_SWITCH) -> LoewnerPair:
    """Determinant of the 2x2 Loewner matrix of ``fn`` at ``(u, v)``.

    A negative value rules out operator monotonicity. Closer than ``switch``
    the divided difference is replaced by the derivative at the midpoint,
    which keeps the result symmetric in ``(u, v)``.
    """
    fu = float(fn.derivative(u))
    fv = float(fn.derivative(v))
    if abs(u - v) < switch:
        dd = float(fn.derivative(0.5 * (u + v)))
    else:
        dd = float((fn(u) - fn(v)) / (u - v))
    return LoewnerPair(float(u), float(v), fu, fv, dd, fu * fv - dd * dd)


def identity_fn() -> ScalarFunction:
    return ScalarFunction("identity", lambda x: x, lambda x: np.ones_like(x))


def log_phi_fn(p: ParamLike = None) -> ScalarFunction:
    lam = as_param(p).lam
    return ScalarFunction("log_phi", lambda x: log_phi(x, lam), lambda x: 1.0 + lam / x, lower=0.0)


def exp_phi_fn(p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ScalarFunction:
    lam = as_param(p).lam
    return ScalarFunction("exp_phi", lambda x: exp_phi(x, lam, cfg),
                          lambda x: exp_phi_derivative(x, lam, cfg))


def u_minus_exp_phi_fn(p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ScalarFunction:
    lam = as_param(p).lam

    def df(x):
        return lam / (lam + np.asarray(exp_phi(x, lam, cfg)))

    return ScalarFunction("u_minus_exp_phi", lambda x: x - exp_phi(x, lam, cfg), df)


def log_exp_phi_fn(p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ScalarFunction:
    lam = as_param(p).lam

    def df(x):
        return 1.0 / (lam + np.asarray(exp_phi(x, lam, cfg)))

    return ScalarFunction("log_exp_phi", lambda x: log_exp_phi(x, lam, cfg), df)
