"""Finite-dimensional model of the deformed exponential family of vector states.

The algebra is M_n acting by left multiplication on Hilbert-Schmidt space,
the reference vector is ``Omega = rho**0.5`` and a direction ``H`` affiliated
with the commutant acts by right multiplication with a Hermitian ``K``. All
vector-state quantities then reduce to traces against ``rho``:

* ``||exp_phi(H - beta)**0.5 Omega||**2 = tr(rho exp_phi(K - beta))``
* ``omega_X`` has density ``rho**0.5 Y rho**0.5`` with ``Y = exp_phi(K - alpha)``
* ``||H Omega||**2 = tr(rho K**2)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from . import report
from .operators import DimensionError, EigenSystem, eig_hermitian, hermitian
from .scalar import (
    DEFAULT_CONFIG,
    ConvergenceError,
    ParamLike,
    ScalarEvalConfig,
    as_param,
    exp_phi,
)

FAITHFUL_THRESHOLD = 1e-10
CENTER_TOL = 1e-10


class HypothesisError(ValueError):
    """Input violates a standing assumption (faithfulness, zero expectation)."""


class NotFaithfulError(HypothesisError):
    pass


class NotCenteredError(HypothesisError):
    pass


@dataclass(frozen=True, eq=False)
class FaithfulDensity:
    rho: np.ndarray
    min_eig: float
    sqrt: np.ndarray = field(repr=False)
    inv_sqrt: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, rho, threshold: float = FAITHFUL_THRESHOLD) -> "FaithfulDensity":
        R = hermitian(rho)
        tr = float(np.trace(R).real)
        if abs(tr - 1.0) > 1e-12:
            raise NotFaithfulError(f"density matrix must have trace 1, got {tr!r}")
        es = eig_hermitian(R)
        lo = float(es.eigenvalues[0])
        if lo <= threshold:
            raise NotFaithfulError(f"density matrix is not faithful: min eigenvalue {lo:.3e}")
        root = np.sqrt(es.eigenvalues)
        return cls(R, lo, es.apply(root), es.apply(1.0 / root))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]


RhoLike = Union[FaithfulDensity, np.ndarray]


def as_density(rho: RhoLike) -> FaithfulDensity:
    return rho if isinstance(rho, FaithfulDensity) else FaithfulDensity.from_matrix(rho)


def _rho_matrix(rho: RhoLike) -> np.ndarray:
    return rho.rho if isinstance(rho, FaithfulDensity) else np.asarray(rho)


@dataclass(frozen=True, eq=False)
class Direction:
    """Centered Hermitian direction ``K`` with its cached eigensystem."""

    K: np.ndarray
    eig: EigenSystem = field(repr=False)

    @classmethod
    def checked(cls, rho: RhoLike, K) -> "Direction":
        Kh = hermitian(K)
        mean = expectation(rho, Kh)
        if abs(mean) > CENTER_TOL * (1.0 + np.max(np.abs(Kh))):
            raise NotCenteredError(
                f"direction has nonzero expectation {mean:.6g}"
            )
        return cls(Kh, eig_hermitian(Kh))

    def scaled(self, t: float) -> "Direction":
        return Direction(t * self.K, EigenSystem(t * self.eig.eigenvalues, self.eig.vectors))

    @property
    def dim(self) -> int:
        return self.K.shape[0]


def expectation(rho: RhoLike, K) -> float:
    """``tr(rho K)``, the expectation ``(H Omega, Omega)``."""
    R = _rho_matrix(rho)
    K = np.asarray(K)
    if R.shape != K.shape:
        raise DimensionError(f"shape mismatch {R.shape} vs {K.shape}")
    return float(np.trace(R @ K).real)


def center_direction(rho: RhoLike, K) -> Direction:
    Kh = hermitian(K)
    Kc = Kh - expectation(rho, Kh) * np.eye(Kh.shape[0])
    return Direction(Kc, eig_hermitian(Kc))


def _weights(rho: RhoLike, d: Direction) -> np.ndarray:
    # diagonal of rho in the eigenbasis of K: a probability vector
    R = _rho_matrix(rho)
    if R.shape != d.K.shape:
        raise DimensionError(f"shape mismatch {R.shape} vs {d.K.shape}")
    V = d.eig.vectors
    return np.einsum("ij,ik,kj->j", V.conj(), R, V).real


def _normalization(w: np.ndarray, k: np.ndarray, beta: float, lam: float, cfg) -> float:
    return float(np.dot(w, exp_phi(k - beta, lam, cfg)))


def normalization_value(rho: RhoLike, d: Direction, beta: float, p: ParamLike = None,
                        cfg: Optional[ScalarEvalConfig] = None) -> float:
    """``N(beta) = tr(rho exp_phi(K - beta))``, strictly decreasing in beta."""
    lam = as_param(p).lam
    return _normalization(_weights(rho, d), d.eig.eigenvalues, beta, lam, cfg)


def _solve_unit_normalization(w: np.ndarray, k: np.ndarray, lam: float,
                              cfg: ScalarEvalConfig) -> float:
    """Root of ``sum_i w_i exp_phi(k_i - beta) = 1`` by safeguarded Newton."""

    def F(beta):
        y = np.asarray(exp_phi(k - beta, lam, cfg))
        n = float(np.dot(w, y))
        dn = -float(np.dot(w, y / (lam + y)))
        return n - 1.0, dn, n

    lo, step = 0.0, 1.0
    f_lo = F(lo)[0]
    while f_lo < 0:
        lo -= step
        step *= 2.0
        f_lo = F(lo)[0]
    if f_lo == 0:
        return lo
    hi, step = lo + 1.0, 1.0
    while F(hi)[0] >= 0:
        lo = hi
        step *= 2.0
        hi = lo + step
        if step > 1e300:
            raise ConvergenceError("could not bracket the normalization root")

    beta = lo
    for _ in range(2 * cfg.max_iter):
        f, df, n = F(beta)
        if f > 0:
            lo = beta
        elif f < 0:
            hi = beta
        if abs(f) <= 8 * np.finfo(float).eps * max(1.0, n):
            return beta
        new = beta - f / df
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - beta) <= 4 * np.finfo(float).eps * max(1.0, abs(beta)):
            return new
        beta = new
    raise ConvergenceError("normalization solver did not converge")


def solve_alpha(rho: RhoLike, d: Direction, p: ParamLike = None,
                cfg: Optional[ScalarEvalConfig] = None) -> float:
    """The normalization ``alpha(H)``: unique root of ``N(beta) = 1``, non-negative."""
    lam = as_param(p).lam
    cfg = cfg or DEFAULT_CONFIG
    _require_centered(rho, d)
    return _solve_unit_normalization(_weights(rho, d), d.eig.eigenvalues, lam, cfg)


def alpha_of(rho: RhoLike, K, p: ParamLike = None,
             cfg: Optional[ScalarEvalConfig] = None) -> float:
    """``alpha`` for an arbitrary Hermitian ``K`` via ``alpha(H + c) = alpha(H) + c``."""
    d = center_direction(rho, K)
    return solve_alpha(rho, d, p, cfg) + expectation(rho, hermitian(K))


def normalization_root(rho: RhoLike, K, p: ParamLike = None,
                       cfg: Optional[ScalarEvalConfig] = None) -> float:
    """Root of ``tr(rho exp_phi(K - beta)) = 1`` for any Hermitian ``K``, no centering."""
    lam = as_param(p).lam
    d = Direction(hermitian(K), eig_hermitian(K))
    return _solve_unit_normalization(_weights(rho, d), d.eig.eigenvalues, lam, cfg or DEFAULT_CONFIG)


def _require_centered(rho: RhoLike, d: Direction) -> None:
    mean = expectation(rho, d.K)
    if abs(mean) > CENTER_TOL * (1.0 + float(np.max(np.abs(d.K)))):
        raise NotCenteredError(f"direction has nonzero expectation {mean:.6g}")


@dataclass(frozen=True, eq=False)
class ModelPoint:
    direction: Direction
    alpha: float
    Y: np.ndarray
    sigma: np.ndarray
    y_eigenvalues: np.ndarray = field(repr=False)
    lam: float = 1.0

    @property
    def normalization(self) -> float:
        return float(np.trace(self.sigma).real)

    def omega(self, A) -> float:
        """``omega_X(A) = tr(sigma A)``."""
        return float(np.trace(self.sigma @ np.asarray(A)).real)


def make_state(rho: RhoLike, d: Direction, p: ParamLike = None,
               cfg: Optional[ScalarEvalConfig] = None) -> ModelPoint:
    """Build ``Y = exp_phi(K - alpha)`` and the density ``sigma = rho**0.5 Y rho**0.5``."""
    rho = as_density(rho)
    lam = as_param(p).lam
    alpha = solve_alpha(rho, d, lam, cfg)
    y = np.asarray(exp_phi(d.eig.eigenvalues - alpha, lam, cfg))
    Y = d.eig.apply(y)
    sigma = rho.sqrt @ Y @ rho.sqrt
    sigma = 0.5 * (sigma + sigma.conj().T)
    return ModelPoint(d, alpha, Y, sigma, y, lam)


def recover_Y(rho: RhoLike, sigma) -> np.ndarray:
    """Invert the state map: ``Y = rho**-0.5 sigma rho**-0.5``."""
    rho = as_density(rho)
    S = np.asarray(sigma, dtype=complex)
    if S.shape != rho.rho.shape:
        raise DimensionError(f"shape mismatch {S.shape} vs {rho.rho.shape}")
    Y = rho.inv_sqrt @ S @ rho.inv_sqrt
    return 0.5 * (Y + Y.conj().T)


@dataclass(frozen=True, eq=False)
class EscortDensity:
    rho_tilde: np.ndarray
    z: float
    phi_eigenvalues: np.ndarray = field(repr=False)

    def expect(self, A) -> float:
        return float(np.trace(self.rho_tilde @ np.asarray(A)).real)


def escort(rho: RhoLike, mp: ModelPoint) -> EscortDensity:
    """Escort density ``rho**0.5 phi(Y) rho**0.5 / z`` with ``z = tr(rho phi(Y))``."""
    rho = as_density(rho)
    y = mp.y_eigenvalues
    ph = y / (mp.lam + y)
    P = mp.direction.eig.apply(ph)
    z = float(np.trace(rho.rho @ P).real)
    rt = rho.sqrt @ P @ rho.sqrt / z
    return EscortDensity(0.5 * (rt + rt.conj().T), z, ph)


def alpha_derivative(rho: RhoLike, d: Direction, t: float, p: ParamLike = None,
                     cfg: Optional[ScalarEvalConfig] = None) -> float:
    """``d/dt alpha(tK) = tr(rho K phi(Y_t)) / tr(rho phi(Y_t))``.

    This is the expectation of ``K`` in the escort of the point at ``tK``.
    """
    rho = as_density(rho)
    mp = make_state(rho, d.scaled(t), p, cfg)
    return _alpha_slope(rho, d, mp)


def _alpha_slope(rho: FaithfulDensity, d: Direction, mp: ModelPoint) -> float:
    y = mp.y_eigenvalues
    P = d.eig.apply(y / (mp.lam + y))
    num = np.trace(rho.rho @ d.K @ P).real
    den = np.trace(rho.rho @ P).real
    return float(num / den)


@dataclass(frozen=True, eq=False)
class GeodesicPoint:
    t: float
    alpha: float
    dalpha_dt: float
    state: ModelPoint
    escort: EscortDensity
    omega: tuple
    tangent: tuple


def geodesic_sample(rho: RhoLike, d: Direction, t_grid: Sequence[float],
                    probes: Sequence = (), p: ParamLike = None,
                    cfg: Optional[ScalarEvalConfig] = None) -> List[GeodesicPoint]:
    """Sample ``t -> omega_t`` with ``Y_t = exp_phi(tK - alpha(tK))``.

    For each probe ``A`` the tangent value is
    ``tr(M K phi(Y_t)) - tr(M phi(Y_t)) * dalpha/dt`` with
    ``M = rho**0.5 A rho**0.5``, which equals ``d/dt tr(sigma_t A)``.
    """
    rho = as_density(rho)
    probes = [hermitian(A) for A in probes]
    for A in probes:
        if A.shape != rho.rho.shape:
            raise DimensionError(f"probe shape {A.shape} does not match {rho.rho.shape}")
    out = []
    for t in t_grid:
        t = float(t)
        mp = make_state(rho, d.scaled(t), p, cfg)
        esc = escort(rho, mp)
        slope = _alpha_slope(rho, d, mp)
        P = d.eig.apply(esc.phi_eigenvalues)
        omegas, tangents = [], []
        for A in probes:
            M = rho.sqrt @ A @ rho.sqrt
            omegas.append(mp.omega(A))
            first = np.trace(M @ d.K @ P).real
            second = np.trace(M @ P).real
            tangents.append(float(first - second * slope))
        out.append(GeodesicPoint(t, mp.alpha, slope, mp, esc, tuple(omegas), tuple(tangents)))
    return out


def verify_alpha_bounds(rho: RhoLike, d: Direction, p: ParamLike = None,
                        cfg: Optional[ScalarEvalConfig] = None,
                        betas: Optional[Sequence[float]] = None) -> List[report.Check]:
    """Check the known bounds on ``alpha`` given ``s = ||H Omega|| = sqrt(tr(rho K^2))``.

    Bounds whose hypothesis on ``s`` fails are reported as skipped. The bounds
    are proved for lam = 1 only; for other lam everything but non-negativity
    is skipped.
    """
    rho = as_density(rho)
    lam = as_param(p).lam
    alpha = solve_alpha(rho, d, lam, cfg)
    s2 = max(float(np.trace(rho.rho @ d.K @ d.K).real), 0.0)
    s = math.sqrt(s2)
    tol = 1e-10
    checks = [report.leq("alpha_nonnegative", "normalization.nonneg", 0.0, alpha, tol)]
    names = ["alpha_below_norm_squared", "alpha_quadratic_lower", "quadratic_lower_vs_s2",
             "alpha_below_norm", "normalization_quadratic_bound"]
    if lam != 1.0:
        checks += [report.skipped(n, "normalization.bounds") for n in names[:4]]
        checks.append(report.skipped("alpha_quadratic_upper", "normalization.bounds"))
        checks.append(report.skipped(names[4], "normalization.bounds"))
        return checks

    if s < 1:
        checks.append(report.leq(names[0], "normalization.small_norm", alpha, s2, tol))
    else:
        checks.append(report.skipped(names[0], "normalization.small_norm"))
    if s <= 6:
        q = 6.0 - math.sqrt(36.0 - s2)
        checks.append(report.leq(names[1], "normalization.quadratic_lower", q, alpha, tol))
        checks.append(report.leq(names[2], "normalization.quadratic_lower", s2 / 12.0, q, 1e-15))
    else:
        checks.append(report.skipped(names[1], "normalization.quadratic_lower"))
        checks.append(report.skipped(names[2], "normalization.quadratic_lower"))
    if s <= 3:
        checks.append(report.leq(names[3], "normalization.linear_upper", alpha, s, tol))
        # N(beta) <= 1 - beta/2 + (s^2 + beta^2)/12 equals 1 at beta = 3 - sqrt(9 - s^2)
        checks.append(report.leq("alpha_quadratic_upper", "normalization.quadratic_upper",
                                 alpha, 3.0 - math.sqrt(9.0 - s2), tol))
    else:
        checks.append(report.skipped(names[3], "normalization.linear_upper"))
        checks.append(report.skipped("alpha_quadratic_upper", "normalization.quadratic_upper"))

    if betas is None:
        betas = np.linspace(-4.0, 6.0, 10)
    w = _weights(rho, d)
    k = d.eig.eigenvalues
    for i, b in enumerate(betas):
        n = _normalization(w, k, float(b), lam, cfg)
        bound = 1.0 - 0.5 * b + (s2 + b * b) / 12.0
        checks.append(report.leq(f"{names[4]}[{i}]", "normalization.series_bound", n, bound,
                                 1e-12 * (1.0 + abs(bound))))
    return checks


def classical_oracle_alpha(p, k, lam: ParamLike = None,
                           cfg: Optional[ScalarEvalConfig] = None) -> float:
    """Commutative normalization: ``alpha`` with ``sum_i p_i exp_phi(k_i - alpha) = 1``.

    Plain bisection, kept separate from the Newton solver so the two can
    check each other on commuting inputs.
    """
    lam_ = as_param(lam).lam
    p = np.asarray(p, dtype=float)
    k = np.asarray(k, dtype=float)
    if p.shape != k.shape or p.ndim != 1:
        raise DimensionError("p and k must be vectors of equal length")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("p must be strictly positive and sum to 1")
    if abs(float(np.dot(p, k))) > CENTER_TOL * (1.0 + np.max(np.abs(k))):
        raise NotCenteredError("k must have zero mean under p")

    def N(beta):
        return float(np.dot(p, exp_phi(k - beta, lam_, cfg)))

    lo, hi = 0.0, 1.0
    while N(hi) > 1.0:
        lo, hi = hi, 2.0 * hi
    if N(lo) <= 1.0:
        return lo
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if N(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
