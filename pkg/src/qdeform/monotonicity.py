"""Certified failures of operator monotonicity for ``u - exp_phi(u)`` and ``log exp_phi(u)``.

Both functions are increasing and concave on the real line, yet their 2x2
Loewner matrix is indefinite at suitable points. Along the curve
``x = (1 + eps) y`` with ``u = log_phi(x)``, ``v = log_phi(y)`` the Loewner
determinant of ``u - exp_phi(u)`` is

    lam/(lam + x) * lam/(lam + y) - [lam log(1+eps) / (eps y + lam log(1+eps))]**2

which, for ``eps = e - 1``, is negative exactly when
``y < lam (3 - e) / (e**2 - 3e + 1)``.

A negative determinant becomes an explicit matrix pair: with
``B = diag(u, v)`` and ``A = B + t * ones``, the first-order change of
``f(A) - f(B)`` is ``t`` times the Loewner matrix itself, so a small enough
``t`` gives ``A >= B`` while ``f(A) - f(B)`` has a negative eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .operators import (
    LoewnerPair,
    ScalarFunction,
    apply_fn,
    hermitian,
    log_exp_phi_fn,
    loewner2_det,
    u_minus_exp_phi_fn,
)
from .scalar import (
    DeformationParameter,
    ParamLike,
    ScalarEvalConfig,
    as_param,
    log_phi,
)

E = math.e
# y values in units of lam; 0.5 comes first so the default certificate sits
# at the classic point eps = e - 1, y = lam / 2.
DEFAULT_Y_GRID = (0.5, 0.25, 0.75, 1.0, 0.1, 1.1, 0.05)
DEFAULT_SIZES = (0.5, 0.25, 0.1, 0.05, 0.01)

FUNCTIONS: Dict[str, Callable[..., ScalarFunction]] = {
    "u_minus_exp_phi": u_minus_exp_phi_fn,
    "log_exp_phi": log_exp_phi_fn,
}


class SearchExhausted(RuntimeError):
    def __init__(self, message: str, best: Optional["LoewnerCertificate"] = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SearchConfig:
    lam: DeformationParameter = DeformationParameter()
    seed: int = 0
    y_grid: Optional[Tuple[float, ...]] = None
    epsilon: float = E - 1.0
    perturbation_sizes: Tuple[float, ...] = DEFAULT_SIZES
    violation_tol: float = 1e-6
    random_trials: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "lam", as_param(self.lam))
        if self.y_grid is not None:
            object.__setattr__(self, "y_grid", tuple(float(y) for y in self.y_grid))
            if not self.y_grid or any(y <= 0 for y in self.y_grid):
                raise ValueError("y_grid must be a nonempty tuple of positive reals")
        if not self.perturbation_sizes or any(t <= 0 for t in self.perturbation_sizes):
            raise ValueError("perturbation sizes must be positive")
        if not (self.epsilon > 0 and self.violation_tol > 0):
            raise ValueError("epsilon and violation_tol must be positive")

    def ys(self) -> Tuple[float, ...]:
        if self.y_grid is not None:
            return self.y_grid
        return tuple(self.lam.lam * y for y in DEFAULT_Y_GRID)


def violation_threshold(lam: float = 1.0) -> float:
    """``lam (3 - e) / (e^2 - 3e + 1)``: at ``eps = e - 1`` the determinant is negative below it."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    return lam * (3.0 - E) / (E * E - 3.0 * E + 1.0)


def closed_form_determinant(y: float, eps: float, lam: float = 1.0) -> float:
    """Closed-form Loewner determinant of ``u - exp_phi(u)`` on the curve ``x = (1+eps) y``."""
    L = lam * math.log1p(eps)
    return (lam / (lam + (1.0 + eps) * y)) * (lam / (lam + y)) - (L / (eps * y + L)) ** 2


@dataclass(frozen=True)
class AppendixPoint:
    y: float
    x: float
    eps: float
    u: float
    v: float
    closed_form: float
    pair: LoewnerPair


def appendix_point(y: float, eps: float = E - 1.0, lam: ParamLike = None,
                   cfg: Optional[ScalarEvalConfig] = None) -> AppendixPoint:
    if not (y > 0 and eps > 0):
        raise ValueError("y and eps must be positive")
    lam_ = as_param(lam).lam
    x = (1.0 + eps) * y
    u = float(log_phi(x, lam_))
    v = float(log_phi(y, lam_))
    pair = loewner2_det(u_minus_exp_phi_fn(lam_, cfg), u, v)
    return AppendixPoint(y, x, eps, u, v, closed_form_determinant(y, eps, lam_), pair)


@dataclass(frozen=True, eq=False)
class LoewnerCertificate:
    function_name: str
    lam: float
    A: np.ndarray
    B: np.ndarray
    order_gap: float
    violation: float
    loewner_point: LoewnerPair
    method: str = "guided"
    perturbation: float = 0.0
    y: Optional[float] = None

    def to_dict(self) -> dict:
        from .io import matrix_to_json

        lp = self.loewner_point
        return {
            "function_name": self.function_name,
            "lambda": self.lam,
            "method": self.method,
            "y": self.y,
            "perturbation": self.perturbation,
            "order_gap": self.order_gap,
            "violation": self.violation,
            "loewner_point": {
                "u": lp.u, "v": lp.v, "fprime_u": lp.fprime_u, "fprime_v": lp.fprime_v,
                "divided_difference": lp.divided_difference, "determinant": lp.determinant,
            },
            "A": matrix_to_json(self.A),
            "B": matrix_to_json(self.B),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoewnerCertificate":
        from .io import matrix_from_json

        lp = d["loewner_point"]
        return cls(
            function_name=d["function_name"],
            lam=float(d["lambda"]),
            A=matrix_from_json(d["A"]),
            B=matrix_from_json(d["B"]),
            order_gap=float(d["order_gap"]),
            violation=float(d["violation"]),
            loewner_point=LoewnerPair(**{k: float(v) for k, v in lp.items()}),
            method=d.get("method", "guided"),
            perturbation=float(d.get("perturbation", 0.0)),
            y=d.get("y"),
        )


def _gap_and_violation(fn: ScalarFunction, A: np.ndarray, B: np.ndarray) -> Tuple[float, float]:
    gap = float(np.linalg.eigvalsh(hermitian(A - B, tol=1e-8))[0])
    diff = apply_fn(A, fn) - apply_fn(B, fn)
    return gap, float(np.linalg.eigvalsh(hermitian(diff, tol=1e-8))[0])


@dataclass(frozen=True)
class CertificateCheck:
    order_gap: float
    violation: float
    valid: bool


def validate_certificate(cert: LoewnerCertificate, violation_tol: float = 1e-6,
                         cfg: Optional[ScalarEvalConfig] = None) -> CertificateCheck:
    """Recompute the certificate from its matrices alone."""
    fn = FUNCTIONS[cert.function_name](cert.lam, cfg)
    A = hermitian(cert.A)
    B = hermitian(cert.B)
    gap, viol = _gap_and_violation(fn, A, B)
    scale = 1.0 + float(np.max(np.abs(A - B)))
    ok = gap >= -1e-12 * scale and viol < -violation_tol
    return CertificateCheck(gap, viol, bool(ok))


def _canonical_name(fn_name: str) -> str:
    name = fn_name.replace("-", "_")
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {fn_name!r}; expected one of {sorted(FUNCTIONS)}")
    return name


def build_counterexample(fn_name: str, cfg: SearchConfig = SearchConfig(),
                         scfg: Optional[ScalarEvalConfig] = None) -> LoewnerCertificate:
    """Construct ``A >= B`` with ``f(A) - f(B)`` not positive semidefinite.

    Guided stage: walk ``cfg.ys()`` in order, and at the first point with a
    negative determinant take ``B = diag(u, v)``, ``A = B + t * ones`` for the
    largest ladder size ``t`` that produces a violation. Fallback: seeded
    random rank-one perturbations ``A = B + t w w^*``.
    """
    name = _canonical_name(fn_name)
    lam = cfg.lam.lam
    fn = FUNCTIONS[name](lam, scfg)
    best: Optional[LoewnerCertificate] = None
    ones = np.ones((2, 2))
    sizes = sorted(cfg.perturbation_sizes, reverse=True)

    for y in cfg.ys():
        pt = appendix_point(y, cfg.epsilon, lam, scfg)
        pair = loewner2_det(fn, pt.u, pt.v)
        B = np.diag([pt.u, pt.v]).astype(complex)
        # points with D >= 0 cannot certify; keep one candidate for the report
        for t in sizes if pair.determinant < 0 else sizes[-1:]:
            A = B + t * ones
            gap, viol = _gap_and_violation(fn, A, B)
            cert = LoewnerCertificate(name, lam, A, B, gap, viol, pair, "guided", t, y)
            if viol < -cfg.violation_tol:
                return cert
            if best is None or viol < best.violation:
                best = cert

    rng = np.random.default_rng(cfg.seed)
    thr = violation_threshold(lam)
    for _ in range(cfg.random_trials):
        y = float(rng.uniform(0.02, 1.0) * thr)
        eps = float(rng.uniform(0.2, 4.0))
        pt = appendix_point(y, eps, lam, scfg)
        pair = loewner2_det(fn, pt.u, pt.v)
        B = np.diag([pt.u, pt.v]).astype(complex)
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        w /= np.linalg.norm(w)
        t = float(rng.choice(sizes))
        A = B + t * np.outer(w, w.conj())
        gap, viol = _gap_and_violation(fn, A, B)
        cert = LoewnerCertificate(name, lam, A, B, gap, viol, pair, "random", t, y)
        if viol < -cfg.violation_tol:
            return cert
        if best is None or viol < best.violation:
            best = cert
    raise SearchExhausted(f"no certificate found for {name}", best)


# -- randomized sanity checks ---------------------------------------------------


def random_positive(rng: np.random.Generator, n: int, floor: float = 0.05) -> np.ndarray:
    """Random strictly positive Hermitian matrix with eigenvalues of order one."""
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    P = G @ G.conj().T / (2 * n)
    return 0.5 * (P + P.conj().T) + floor * np.eye(n)


def random_psd(rng: np.random.Generator, n: int) -> np.ndarray:
    r = int(rng.integers(1, n + 1))
    G = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    P = G @ G.conj().T * (rng.uniform(0.01, 2.0) / (2 * n))
    return 0.5 * (P + P.conj().T)


@dataclass
class SanityReport:
    function_name: str
    trials: int
    failures: int
    worst_slack: float
    tolerance: float
    examples: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.failures == 0


def monotone_sanity(fn: ScalarFunction, trials: int, cfg: SearchConfig = SearchConfig(),
                    dims: Tuple[int, int] = (2, 6), tol: float = 1e-8,
                    near: Optional[LoewnerCertificate] = None,
                    noise: float = 1e-3) -> SanityReport:
    """Test ``A <= B => fn(A) <= fn(B)`` on random pairs.

    Without ``near``, pairs are ``0 < A <= B`` of dimension within ``dims``.
    With ``near``, pairs are the certificate matrices shifted by a common
    small Hermitian perturbation, which keeps their order; the first trial
    is the certificate itself. ``worst_slack`` is the smallest eigenvalue of
    ``fn(B) - fn(A)`` seen.
    """
    rng = np.random.default_rng(cfg.seed)
    failures, worst = 0, math.inf
    bad = []
    for i in range(trials):
        if near is None:
            n = int(rng.integers(dims[0], dims[1] + 1))
            A = random_positive(rng, n)
            B = A + random_psd(rng, n)
        else:
            n = near.A.shape[0]
            G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            N = 0.0 if i == 0 else noise * 0.5 * (G + G.conj().T)
            A, B = near.B + N, near.A + N
        slack = float(np.linalg.eigvalsh(hermitian(apply_fn(B, fn) - apply_fn(A, fn), tol=1e-8))[0])
        worst = min(worst, slack)
        if slack < -tol:
            failures += 1
            if len(bad) < 5:
                bad.append((A, B))
    return SanityReport(fn.name, trials, failures, worst, tol, bad)


def concavity_sanity(fn: ScalarFunction, trials: int, cfg: SearchConfig = SearchConfig(),
                     dims: Tuple[int, int] = (2, 6), tol: float = 1e-8,
                     weights: Optional[Sequence[float]] = None) -> SanityReport:
    """Test ``fn(m A + (1-m) B) >= m fn(A) + (1-m) fn(B)`` on random positive pairs.

    ``m`` is drawn uniformly from [0, 1] unless ``weights`` fixes it per trial.
    """
    rng = np.random.default_rng(cfg.seed + 1)
    failures, worst = 0, math.inf
    bad = []
    for i in range(trials):
        n = int(rng.integers(dims[0], dims[1] + 1))
        A = random_positive(rng, n)
        B = random_positive(rng, n)
        m = float(weights[i % len(weights)]) if weights else float(rng.uniform())
        gap = apply_fn(m * A + (1 - m) * B, fn) - m * apply_fn(A, fn) - (1 - m) * apply_fn(B, fn)
        slack = float(np.linalg.eigvalsh(hermitian(gap, tol=1e-8))[0])
        worst = min(worst, slack)
        if slack < -tol:
            failures += 1
            if len(bad) < 5:
                bad.append((A, B))
    return SanityReport(fn.name, trials, failures, worst, tol, bad)
