"""Deformed logarithm and exponential for phi(u) = u / (lam + u).

The deformed logarithm is ``log_phi(v) = v - 1 + lam * log(v)``; its inverse
``exp_phi`` grows linearly at +infinity and like ``exp((1 + u) / lam)`` at
-infinity. Everything here accepts scalars or numpy arrays and returns the
same kind of object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class DomainError(ValueError):
    """Argument outside the domain of a deformed function."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations."""


@dataclass(frozen=True)
class DeformationParameter:
    lam: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"deformation parameter must be positive, got {self.lam!r}")


@dataclass(frozen=True)
class ScalarEvalConfig:
    newton_tol: float = 1e-12
    max_iter: int = 100
    asymptotic_threshold: float = 700.0

    def __post_init__(self):
        if not (0 < self.newton_tol <= 1e-6):
            raise ValueError("newton_tol must lie in (0, 1e-6]")
        if self.max_iter < 10:
            raise ValueError("max_iter must be at least 10")


DEFAULT_PARAM = DeformationParameter()
DEFAULT_CONFIG = ScalarEvalConfig()

ParamLike = Union[DeformationParameter, float, None]


def as_param(p: ParamLike) -> DeformationParameter:
    if p is None:
        return DEFAULT_PARAM
    if isinstance(p, DeformationParameter):
        return p
    return DeformationParameter(float(p))


def _out(x: np.ndarray, scalar: bool):
    return float(x) if scalar else x


def phi(u: ArrayLike, p: ParamLike = None) -> ArrayLike:
    lam = as_param(p).lam
    arr = np.asarray(u, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("phi is defined for u > 0 only")
    return _out(arr / (lam + arr), arr.ndim == 0)


def log_phi(v: ArrayLike, p: ParamLike = None) -> ArrayLike:
    """Deformed logarithm ``v - 1 + lam * log(v)``; concave and increasing."""
    lam = as_param(p).lam
    arr = np.asarray(v, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_phi is defined for v > 0 only")
    return _out(arr - 1.0 + lam * np.log(arr), arr.ndim == 0)


def _newton_log_space(u: np.ndarray, lam: float, cfg: ScalarEvalConfig) -> np.ndarray:
    # Solve g(w) = e^w - 1 + lam*w - u = 0 for w = log(exp_phi(u)).
    # g is convex increasing, so Newton started at the upper bracket end
    # decreases monotonically; the bracket test only guards rounding.
    pos = u >= 0
    lo = np.where(pos, np.log1p(np.maximum(u, 0.0) / (1.0 + lam)), u / lam)
    hi = np.where(pos, np.log1p(np.maximum(u, 0.0)), np.minimum(0.0, (1.0 + u) / lam))
    w = hi.copy()
    active = np.ones(u.shape, dtype=bool)
    for _ in range(cfg.max_iter):
        if not active.any():
            return w
        wa = w[active]
        ew = np.exp(wa)
        g = ew - 1.0 + lam * wa - u[active]
        step = g / (ew + lam)
        new = wa - step
        la, ha = lo[active], hi[active]
        # shrink bracket with the sign of g
        la = np.where(g < 0, wa, la)
        ha = np.where(g > 0, wa, ha)
        done = (np.abs(step) <= cfg.newton_tol * np.maximum(1.0, np.abs(wa))) | (g == 0)
        outside = ((new < la) | (new > ha)) & ~done
        new = np.where(outside, 0.5 * (la + ha), new)
        lo[active], hi[active] = la, ha
        w[active] = new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    if active.any():
        raise ConvergenceError(
            f"exp_phi did not converge in {cfg.max_iter} iterations "
            f"(first offending u = {u[active][0]!r})"
        )
    return w


def _large_branch(u: np.ndarray, lam: float, cfg: ScalarEvalConfig) -> np.ndarray:
    # Fixed point v = 1 + u - lam*log(v); contraction factor lam/v.
    v = 1.0 + u
    for _ in range(cfg.max_iter):
        nv = 1.0 + u - lam * np.log(v)
        if np.all(np.abs(nv - v) <= cfg.newton_tol * nv):
            return np.log(nv)
        v = nv
    raise ConvergenceError("exp_phi fixed-point iteration did not converge")


def log_exp_phi(u: ArrayLike, p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ArrayLike:
    """Return ``log(exp_phi(u))`` without forming ``exp_phi(u)``.

    Stays finite where ``exp_phi`` itself underflows (u below about -708*lam).
    """
    lam = as_param(p).lam
    cfg = cfg or DEFAULT_CONFIG
    arr = np.asarray(u, dtype=float)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).ravel()
    if not np.all(np.isfinite(flat)):
        raise DomainError("exp_phi requires finite arguments")
    w = np.empty_like(flat)

    thr = cfg.asymptotic_threshold
    big = (flat > thr) & (1.0 + flat > 4.0 * lam)
    w0 = (1.0 + flat) / lam
    small = (flat < -thr) & (w0 < -40.0)
    mid = ~(big | small)

    if big.any():
        w[big] = _large_branch(flat[big], lam, cfg)
    if small.any():
        # lower branch: lam*w = 1 + u - e^w with e^w below 4e-18
        ws = w0[small] - np.exp(w0[small]) / lam
        w[small] = np.clip(ws, flat[small] / lam, w0[small])
    if mid.any():
        w[mid] = _newton_log_space(flat[mid], lam, cfg)
    w = w.reshape(np.shape(arr))
    return _out(w, scalar)


def exp_phi(u: ArrayLike, p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ArrayLike:
    """Deformed exponential: the unique ``v > 0`` with ``log_phi(v) = u``."""
    w = log_exp_phi(u, p, cfg)
    return _out(np.exp(np.asarray(w)), np.ndim(w) == 0)


def exp_phi_derivative(u: ArrayLike, p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ArrayLike:
    """``d/du exp_phi(u) = phi(exp_phi(u))``, always in (0, 1)."""
    lam = as_param(p).lam
    v = np.asarray(exp_phi(u, p, cfg))
    return _out(v / (lam + v), v.ndim == 0)


def f_t(t: float, lam: ArrayLike, mu: ArrayLike, p: ParamLike = None,
        cfg: Optional[ScalarEvalConfig] = None) -> ArrayLike:
    """``exp_phi(t * log_phi(lam) + mu)``.

    ``lam`` is the function argument here, not the deformation parameter.
    """
    if not t > 0:
        raise DomainError("f_t requires t > 0")
    return exp_phi(t * np.asarray(log_phi(lam, p)) + mu, p, cfg)


def f_t_lower_bound(t: float, lam: float, mu: float) -> Optional[float]:
    """``t*lam/2`` when ``0 < t <= 1`` and ``mu + 2(1-t) + t*log 2 >= 0``, else None."""
    if 0 < t <= 1 and mu + 2.0 * (1.0 - t) + t * math.log(2.0) >= 0:
        return 0.5 * t * lam
    return None


def f_t_upper_bound(t: float, lam: float, mu: float) -> Optional[float]:
    """``t*lam + gamma`` with ``gamma = exp(1 + (mu - t log t)/(1 - t))``; needs ``0 < t < 1``."""
    if not 0 < t < 1:
        return None
    expo = 1.0 + (mu - t * math.log(t)) / (1.0 - t)
    if expo > 700:
        return math.inf
    return t * lam + math.exp(expo)


def _secant_series(u: np.ndarray, lam: float) -> np.ndarray:
    a = 1.0 / (1.0 + lam)
    b = lam / (2.0 * (1.0 + lam) ** 3)
    c = lam * (a * b - a ** 3 / 3.0) / (1.0 + lam)
    return a + b * u + c * u * u


def secant_f(u: ArrayLike, p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ArrayLike:
    """Secant slope ``(exp_phi(u) - 1) / u`` with its limit ``phi(1)`` at 0.

    Uses a third-order Taylor expansion for ``|u| < 1e-5`` to dodge the
    cancellation in the numerator.
    """
    lam = as_param(p).lam
    arr = np.asarray(u, dtype=float)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    near = np.abs(flat) < 1e-5
    if near.any():
        out[near] = _secant_series(flat[near], lam)
    far = ~near
    if far.any():
        uf = flat[far]
        # expm1 keeps precision when exp_phi(u) is close to 1
        out[far] = np.expm1(np.asarray(log_exp_phi(uf, lam, cfg))) / uf
    return _out(out.reshape(arr.shape), scalar)


def square_gap(u: ArrayLike, p: ParamLike = None, cfg: Optional[ScalarEvalConfig] = None) -> ArrayLike:
    """``1 + u*exp_phi(u) - exp_phi(u)**2``; non-negative, zero only at ``u = 0``."""
    v = np.asarray(exp_phi(u, p, cfg))
    g = 1.0 + np.asarray(u) * v - v * v
    return _out(g, g.ndim == 0)


def series_bound(u: ArrayLike) -> ArrayLike:
    """Quadratic majorant ``1 + u/2 + u**2/12`` of exp_phi (lam = 1)."""
    return 1.0 + 0.5 * np.asarray(u) + np.asarray(u) ** 2 / 12.0


def log_square_excess(u: ArrayLike) -> ArrayLike:
    """``[log phi(u)]**2 - log_phi(u)**2`` for lam = 1."""
    arr = np.asarray(u, dtype=float)
    return (np.log(arr) - np.log1p(arr)) ** 2 - np.asarray(log_phi(arr)) ** 2


def default_constant_grid(points: int = 200_001) -> np.ndarray:
    return np.logspace(-8.0, 8.0, points)


def scan_constant_C(grid: Optional[np.ndarray] = None) -> float:
    """Empirical supremum of ``[log phi(u)]^2 - (log_phi u)^2`` over a grid.

    The grid must span at least [1e-8, 1e8] with 1e5 or more points; a
    log-uniform grid is the default because the excess peaks between 0.3
    and 1 and falls off at both ends.
    """
    g = default_constant_grid() if grid is None else np.asarray(grid, dtype=float)
    if g.size < 100_000 or g.min() > 1e-8 or g.max() < 1e8 or np.any(g <= 0):
        raise ValueError("grid must hold >= 1e5 positive points covering [1e-8, 1e8]")
    return float(np.max(log_square_excess(g)))
