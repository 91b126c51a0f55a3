"""Randomized property suites behind ``qdeform verify``.

Every suite is a pure function of ``(seed, trials)`` and returns an ordered
list of :class:`~qdeform.report.Check`, so two runs with the same seed give
identical reports.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List

import numpy as np

from . import monotonicity as lab
from .operators import (
    apply_fn,
    eig_hermitian,
    exp_phi_fn,
    identity_fn,
    log_phi_fn,
    loewner2_det,
    psd_order_leq,
    u_minus_exp_phi_fn,
)
from .report import Check, close, leq, truth
from .scalar import (
    exp_phi,
    exp_phi_derivative,
    f_t,
    f_t_lower_bound,
    f_t_upper_bound,
    log_exp_phi,
    log_phi,
    log_square_excess,
    scan_constant_C,
    secant_f,
    square_gap,
    series_bound,
)
from .states import (
    Direction,
    FaithfulDensity,
    alpha_derivative,
    center_direction,
    classical_oracle_alpha,
    escort,
    geodesic_sample,
    make_state,
    normalization_root,
    normalization_value,
    recover_Y,
    solve_alpha,
    verify_alpha_bounds,
)

QUBIT_ALPHA = 0.1299


def _max(x) -> float:
    x = np.asarray(x)
    return float(np.max(x)) if x.size else 0.0


# -- scalar -------------------------------------------------------------------


def scalar_suite(seed: int = 0, trials: int = 100_000) -> List[Check]:
    rng = np.random.default_rng(seed)
    u = rng.uniform(-50.0, 50.0, trials)
    probes = np.array([-1e6, -1e3, -700.0, 700.0, 1e3, 1e6, 0.0])
    v = exp_phi(u)
    w_probe = log_exp_phi(probes)
    out: List[Check] = []

    out.append(close("exp_phi_at_zero", "deformed.special_values", exp_phi(0.0), 1.0, 0.0))
    out.append(close("log_phi_at_one", "deformed.special_values", log_phi(1.0), 0.0, 0.0))

    rel = np.abs(v - (1.0 + u - np.log(v))) / np.maximum(1.0, v)
    out.append(leq("identity_v_plus_log_v", "deformed.identity", _max(rel), 0.0, 1e-10))
    # far tails in log space, where exp_phi itself may underflow
    vp = np.exp(w_probe)
    err = np.abs(vp - (1.0 + probes - w_probe)) / np.maximum(1.0, vp)
    out.append(leq("identity_overflow_probes", "deformed.identity", _max(err), 0.0, 1e-9))

    uu = np.concatenate([np.linspace(-700.0, 700.0, 20_001), rng.uniform(-700, 700, 10_000)])
    out.append(leq("round_trip", "deformed.inverse", _max(np.abs(log_phi(exp_phi(uu)) - uu)), 0.0, 1e-9))

    u2 = rng.permutation(u)
    lip = np.abs(v - exp_phi(u2)) - np.abs(u - u2)
    out.append(leq("lipschitz", "deformed.lipschitz", _max(lip), 0.0, 1e-12))
    pairs = np.abs(vp[:-1] - vp[1:]) - np.abs(probes[:-1] - probes[1:])
    out.append(leq("lipschitz_probes", "deformed.lipschitz", _max(pairs), 0.0, 1e-9))

    out.append(leq("lower_bound_half", "deformed.lower_bound", _max(1.0 + u / 2 - v), 0.0, 1e-9))
    out.append(leq("lower_bound_half_probes", "deformed.lower_bound",
                   _max(1.0 + probes / 2 - vp), 0.0, 1e-9))

    neg = u < 0
    un, vn = u[neg], v[neg]
    out.append(leq("sandwich_upper", "deformed.sandwich",
                   _max((vn - np.exp(1.0 + un)) / vn), 0.0, 1e-9))
    out.append(leq("sandwich_lower", "deformed.sandwich",
                   _max((np.exp(un) - vn) / vn), 0.0, 1e-9))
    pn = probes < 0
    out.append(leq("sandwich_log_probes", "deformed.sandwich",
                   _max(np.maximum(w_probe[pn] - (1.0 + probes[pn]), probes[pn] - w_probe[pn])), 0.0, 1e-9))

    out.append(leq("series_bound", "deformed.series_bound", _max(v - series_bound(u)), 0.0, 1e-9))
    out.append(leq("series_bound_probes", "deformed.series_bound",
                   _max(vp - series_bound(probes)), 0.0, 1e-9))

    a = rng.uniform(0.0, 100.0, 20_000) + 1e-12
    b = rng.uniform(0.0, 100.0, 20_000) + 1e-12
    three = np.abs(log_phi(a * b) - log_phi(a) - log_phi(b) - (a - 1) * (b - 1))
    out.append(leq("three_term_identity", "deformed.product_rule", _max(three), 0.0, 1e-10))

    g = square_gap(u)
    out.append(leq("square_gap_nonnegative", "secant.square_gap", -float(np.min(g)), 0.0, 1e-9))
    out.append(close("square_gap_zero_at_origin", "secant.square_gap", square_gap(0.0), 0.0, 0.0))
    away = np.abs(u) >= 1e-3
    out.append(truth("square_gap_positive_off_origin", "secant.square_gap", bool(np.all(g[away] > 0))))

    grid = np.sort(np.concatenate([u, np.linspace(-1e-3, 1e-3, 2001)]))
    f = secant_f(grid)
    out.append(truth("secant_in_unit_interval", "secant.range", bool(np.all((f > 0) & (f < 1)))))
    out.append(leq("secant_increasing", "secant.monotone", -float(np.min(np.diff(f))), 0.0, 1e-12))
    h = 1e-5
    fd = (secant_f(grid + h) - secant_f(grid - h)) / (2 * h)
    out.append(leq("secant_derivative_below_half", "secant.derivative", _max(fd), 0.5, 1e-9))
    s1, s2 = secant_f(u), secant_f(u2)
    out.append(leq("secant_half_lipschitz", "secant.lipschitz",
                   _max(np.abs(s1 - s2) - 0.5 * np.abs(u - u2)), 0.0, 1e-12))
    out.append(close("secant_limit_minus_inf", "secant.limits", secant_f(-1e6), 0.0, 1e-3))
    out.append(close("secant_limit_plus_inf", "secant.limits", secant_f(1e6), 1.0, 1e-3))
    out.append(close("secant_at_zero", "secant.limits", secant_f(0.0), 0.5, 0.0))

    pts = rng.uniform(-20, 20, 200)
    hd = 1e-6
    fdd = (exp_phi(pts + hd) - exp_phi(pts - hd)) / (2 * hd)
    out.append(leq("derivative_matches_fd", "deformed.derivative",
                   _max(np.abs(fdd - exp_phi_derivative(pts))), 0.0, 1e-6))
    der = exp_phi_derivative(u)
    out.append(truth("derivative_in_unit_interval", "deformed.derivative", bool(np.all((der > 0) & (der < 1)))))

    out.extend(_ft_checks(rng, 2000))

    C = scan_constant_C()
    out.append(truth("constant_C_in_range", "logsquare.constant", 0.48 < C < 0.52, C, 0.52))
    out.append(leq("constant_C_above_u1_value", "logsquare.constant", math.log(2) ** 2, C, 0.0))
    ex = log_square_excess(np.logspace(-8, 8, 100_001))
    out.append(leq("logsquare_inequality_C052", "logsquare.inequality", _max(ex), 0.52, 0.0))
    return out


def _ft_checks(rng, n: int) -> List[Check]:
    t = rng.uniform(0.01, 1.0, n)
    lam = np.exp(rng.uniform(np.log(1e-3), np.log(100.0), n))
    mu = rng.uniform(-5.0, 5.0, n)
    vals = np.array([f_t(ti, li, mi) for ti, li, mi in zip(t, lam, mu)])
    up_l = np.array([f_t(ti, li * 1.01, mi) for ti, li, mi in zip(t, lam, mu)])
    up_m = np.array([f_t(ti, li, mi + 0.01) for ti, li, mi in zip(t, lam, mu)])
    out = [
        truth("ft_increasing_in_lambda", "ft.monotone", bool(np.all(up_l > vals))),
        truth("ft_increasing_in_mu", "ft.monotone", bool(np.all(up_m > vals))),
    ]
    worst_lo, worst_hi, n_lo, n_hi = -math.inf, -math.inf, 0, 0
    for ti, li, mi, fv in zip(t, lam, mu, vals):
        lo = f_t_lower_bound(ti, li, mi)
        if lo is not None:
            n_lo += 1
            worst_lo = max(worst_lo, (lo - fv) / max(1.0, fv))
        hi = f_t_upper_bound(ti, li, mi)
        if hi is not None and math.isfinite(hi):
            n_hi += 1
            worst_hi = max(worst_hi, (fv - hi) / max(1.0, hi))
    out.append(leq("ft_lower_bound", "ft.lower_bound", worst_lo if n_lo else 0.0, 0.0, 1e-12))
    out.append(leq("ft_upper_bound", "ft.upper_bound", worst_hi if n_hi else 0.0, 0.0, 1e-12))
    out.append(truth("ft_bound_coverage", "ft.coverage", n_lo > 100 and n_hi > 100, n_lo, n_hi))
    return out


# -- operator -------------------------------------------------------------------


def random_hermitian(rng, n: int, scale: float = 1.0) -> np.ndarray:
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (G + G.conj().T)


def operator_suite(seed: int = 0, trials: int = 200) -> List[Check]:
    rng = np.random.default_rng(seed)
    out: List[Check] = []
    recon = unit = comm = spec = rt = 0.0
    order_ok = True
    ef = exp_phi_fn()
    lf = log_phi_fn()
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        A = random_hermitian(rng, n, rng.uniform(0.1, 5.0))
        es = eig_hermitian(A)
        radius = float(np.max(np.abs(es.eigenvalues)))
        recon = max(recon, np.max(np.abs(es.reconstruct() - A)) / (1 + radius))
        unit = max(unit, np.max(np.abs(es.vectors.conj().T @ es.vectors - np.eye(n))))
        F = apply_fn(A, ef, es)
        comm = max(comm, np.max(np.abs(F @ A - A @ F)) / (1 + radius) ** 2)
        got = np.linalg.eigvalsh(F)
        spec = max(spec, np.max(np.abs(np.sort(exp_phi(es.eigenvalues)) - got)))
        # exp_phi squeezes very negative eigenvalues towards 0, where log_phi
        # amplifies eigensolver noise; the round trip uses unit-scale input
        A1 = random_hermitian(rng, 6)
        rt = max(rt, np.max(np.abs(apply_fn(apply_fn(A1, ef), lf) - A1)))
        w = rng.normal(size=n) + 1j * rng.normal(size=n)
        order_ok &= psd_order_leq(A, A + np.outer(w, w.conj()))
    out.append(leq("eig_reconstruction", "spectral.eigensystem", recon, 0.0, 1e-10))
    out.append(leq("eig_unitarity", "spectral.eigensystem", unit, 0.0, 1e-10))
    out.append(leq("apply_fn_commutes", "spectral.functional_calculus", comm, 0.0, 1e-9))
    out.append(leq("spectral_mapping", "spectral.functional_calculus", spec, 0.0, 1e-9))
    out.append(leq("exp_log_round_trip", "spectral.functional_calculus", rt, 0.0, 1e-8))
    out.append(truth("rank_one_order", "spectral.order", bool(order_ok)))

    cfg = lab.SearchConfig(seed=seed)
    mono = lab.monotone_sanity(lf, trials, cfg)
    out.append(leq("log_phi_operator_monotone", "operator.log_phi_monotone", -mono.worst_slack, 0.0, 1e-8))
    conc = lab.concavity_sanity(lf, trials, cfg, weights=[0.5])
    out.append(leq("log_phi_operator_concave", "operator.log_phi_concave", -conc.worst_slack, 0.0, 1e-8))

    x = np.exp(rng.uniform(-6, 6, (trials, 2)))
    dets = [loewner2_det(lf, a, b).determinant for a, b in x]
    out.append(leq("log_phi_loewner_nonnegative", "operator.log_phi_monotone", -min(dets), 0.0, 1e-12))
    idf = identity_fn()
    out.append(close("identity_loewner_zero", "loewner.affine",
                     max(abs(loewner2_det(idf, a, b).determinant) for a, b in x), 0.0, 1e-12))
    um = u_minus_exp_phi_fn()
    sym = cont = 0.0
    for a, b in rng.uniform(-5, 5, (50, 2)):
        sym = max(sym, abs(loewner2_det(um, a, b).determinant - loewner2_det(um, b, a).determinant))
        # coincident points: the Loewner matrix is f'(a) * ones, determinant 0
        cont = max(cont, abs(loewner2_det(um, a, a + 1e-7).determinant))
    out.append(leq("loewner_symmetric", "loewner.determinant", sym, 0.0, 1e-12))
    out.append(leq("loewner_continuous_at_diagonal", "loewner.determinant", cont, 0.0, 1e-6))
    return out


# -- state ------------------------------------------------------------------------


def random_instance(rng, n: int, scale=None, diagonal: bool = False):
    """Random faithful ``rho`` and centered direction ``K``."""
    if diagonal:
        p = rng.uniform(0.05, 1.0, n)
        p /= p.sum()
        rho = np.diag(p).astype(complex)
        K = np.diag(rng.normal(size=n)).astype(complex)
    else:
        P = lab.random_positive(rng, n, floor=0.02)
        rho = P / np.trace(P).real
        K = random_hermitian(rng, n)
    s = rng.uniform(0.05, 4.0) if scale is None else scale
    d = center_direction(rho, K)
    K = d.K * (s / max(math.sqrt(float(np.trace(rho @ d.K @ d.K).real)), 1e-300))
    d = center_direction(rho, K)
    return FaithfulDensity.from_matrix(rho), d


def state_suite(seed: int = 0, trials: int = 100, fd_points: int = 20) -> List[Check]:
    rng = np.random.default_rng(seed)
    out: List[Check] = []
    norm_err = trace_err = shift_err = conv = deriv = tangent = recover = 0.0
    mono = -math.inf
    min_sigma = math.inf
    z_lo, z_hi = math.inf, -math.inf
    phi_ok = True
    bounds_fail = []
    for i in range(trials):
        n = int(rng.integers(2, 9))
        rho, d = random_instance(rng, n)
        alpha = solve_alpha(rho, d)
        norm_err = max(norm_err, abs(normalization_value(rho, d, alpha) - 1.0))
        mp = make_state(rho, d)
        trace_err = max(trace_err, abs(np.trace(mp.sigma).real - 1.0))
        min_sigma = min(min_sigma, float(np.linalg.eigvalsh(mp.sigma)[0]))
        c = float(rng.uniform(-10, 10))
        shifted = normalization_root(rho, d.K + c * np.eye(n))
        shift_err = max(shift_err, abs(shifted - alpha - c))
        bounds_fail += [ch.name for ch in verify_alpha_bounds(rho, d) if not ch.ok]

        t1, t2 = rng.uniform(-3, 3, 2)
        a1 = solve_alpha(rho, d.scaled(t1))
        a2 = solve_alpha(rho, d.scaled(t2))
        am = solve_alpha(rho, d.scaled(0.5 * (t1 + t2)))
        conv = max(conv, am - 0.5 * (a1 + a2))

        b1, b2 = np.sort(rng.uniform(-5, 5, 2))
        if b1 < b2:
            mono = max(mono, normalization_value(rho, d, b2) - normalization_value(rho, d, b1))

        esc = escort(rho, mp)
        z_lo, z_hi = min(z_lo, esc.z), max(z_hi, esc.z)
        trace_err = max(trace_err, abs(np.trace(esc.rho_tilde).real - 1.0))
        phi_ok &= bool(np.all((esc.phi_eigenvalues > 0) & (esc.phi_eigenvalues < 1)))

        recover = max(recover, np.max(np.abs(recover_Y(rho, mp.sigma) - mp.Y)))

        h = 1e-4
        for t in rng.uniform(-2, 2, fd_points):
            fd = (solve_alpha(rho, d.scaled(t + h)) - solve_alpha(rho, d.scaled(t - h))) / (2 * h)
            deriv = max(deriv, abs(alpha_derivative(rho, d, t) - fd))

        if i < max(1, trials // 5):
            probes = [random_hermitian(rng, n) for _ in range(5)]
            t = float(rng.uniform(-2, 2))
            mid, lo, hi = geodesic_sample(rho, d, [t, t - h, t + h], probes)
            fd = (np.array(hi.omega) - np.array(lo.omega)) / (2 * h)
            tangent = max(tangent, float(np.max(np.abs(fd - np.array(mid.tangent)))))

    out.append(leq("normalization_residual", "normalization.existence", norm_err, 0.0, 1e-11))
    out.append(leq("state_and_escort_trace", "state.normalized", trace_err, 0.0, 1e-10))
    out.append(truth("sigma_positive_definite", "state.separating", min_sigma > 0, min_sigma, 0.0))
    out.append(leq("shift_covariance", "normalization.shift", shift_err, 0.0, 1e-10))
    out.append(truth("alpha_bounds", "normalization.bounds", not bounds_fail, len(bounds_fail), 0))
    out.append(leq("midpoint_convexity_in_t", "normalization.convex_in_t", conv, 0.0, 1e-10))
    out.append(truth("normalization_strictly_decreasing", "normalization.monotone", mono < 0, mono, 0.0))
    out.append(truth("escort_z_range", "escort.bounds", 0 < z_lo and z_hi <= 0.5 + 1e-15, z_lo, z_hi))
    out.append(truth("escort_phi_in_unit_interval", "escort.bounds", phi_ok))
    out.append(leq("recover_Y_round_trip", "state.injective", recover, 0.0, 1e-8))
    out.append(leq("alpha_derivative_fd", "tangent.alpha_derivative", deriv, 0.0, 1e-6))
    out.append(leq("tangent_functional_fd", "tangent.functional", tangent, 0.0, 1e-5))

    out.extend(diagonal_checks(rng, max(1, trials // 2)))

    rho = FaithfulDensity.from_matrix(np.eye(2) / 2)
    d = Direction.checked(rho, np.diag([1.0, -1.0]))
    a = solve_alpha(rho, d)
    out.append(close("qubit_alpha_reference", "normalization.reference", a, QUBIT_ALPHA, 5e-4))
    out.append(close("qubit_alpha_vs_bisection", "normalization.reference",
                     a, classical_oracle_alpha([0.5, 0.5], [1.0, -1.0]), 1e-12))
    out.append(close("derivative_vanishes_at_zero", "tangent.alpha_derivative",
                     alpha_derivative(rho, d, 0.0), 0.0, 1e-12))
    return out


def diagonal_checks(rng, trials: int) -> List[Check]:
    err_a = err_s = err_e = err_d = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        rho, d = random_instance(rng, n, diagonal=True)
        p = np.diag(rho.rho).real
        k = np.diag(d.K).real
        a_cl = classical_oracle_alpha(p, k)
        mp = make_state(rho, d)
        y = exp_phi(k - a_cl)
        err_a = max(err_a, abs(mp.alpha - a_cl))
        err_s = max(err_s, np.max(np.abs(mp.sigma - np.diag(p * y))))
        ph = y / (1 + y)
        esc = escort(rho, mp)
        err_e = max(err_e, np.max(np.abs(esc.rho_tilde - np.diag(p * ph / np.dot(p, ph)))))
        t = float(rng.uniform(-2, 2))
        a_t = classical_oracle_alpha(p, t * k)
        yt = exp_phi(t * k - a_t)
        pt = yt / (1 + yt)
        err_d = max(err_d, abs(alpha_derivative(rho, d, t) - np.dot(p, k * pt) / np.dot(p, pt)))
    return [
        leq("diagonal_alpha", "commutative.reduction", err_a, 0.0, 1e-10),
        leq("diagonal_sigma", "commutative.reduction", err_s, 0.0, 1e-10),
        leq("diagonal_escort", "commutative.reduction", err_e, 0.0, 1e-10),
        leq("diagonal_derivative", "commutative.reduction", err_d, 0.0, 1e-10),
    ]


# -- monotonicity lab ---------------------------------------------------------------


def _determinant_root(eps: float = math.e - 1.0, lam: float = 1.0) -> float:
    # bisection for the sign change of the closed-form determinant in y
    lo, hi = 1e-3 * lam, 10.0 * lam
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lab.closed_form_determinant(mid, eps, lam) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lab_suite(seed: int = 0, trials: int = 500) -> List[Check]:
    out: List[Check] = []
    out.append(close("threshold_is_determinant_root", "nonmonotone.threshold",
                     lab.violation_threshold(1.0), _determinant_root(), 1e-10))
    out.append(close("threshold_linear", "nonmonotone.threshold",
                     lab.violation_threshold(2.0), 2 * lab.violation_threshold(1.0), 1e-14))
    pt = lab.appendix_point(0.5)
    out.append(close("reference_point_determinant", "nonmonotone.determinant", pt.closed_form, -0.00673, 1e-5))
    out.append(close("closed_form_vs_divided_differences", "nonmonotone.determinant",
                     pt.closed_form, pt.pair.determinant, 1e-10))
    out.append(close("reference_point_u_minus_v", "nonmonotone.parametrization",
                     pt.u - pt.v, pt.eps * pt.y + math.log1p(pt.eps), 1e-10))
    out.append(leq("negative_below_threshold", "nonmonotone.determinant", pt.pair.determinant, 0.0, 0.0))
    above = lab.appendix_point(1.3)
    out.append(leq("positive_above_threshold", "nonmonotone.determinant", 0.0, above.pair.determinant, 0.0))

    for lam in (1.0, 0.5, 2.0):
        cfg = lab.SearchConfig(lam=lam, seed=seed)
        for name in lab.FUNCTIONS:
            try:
                cert = lab.build_counterexample(name, cfg)
                chk = lab.validate_certificate(cert, cfg.violation_tol)
                out.append(truth(f"certificate_{name}_lam{lam:g}", "nonmonotone.certificate",
                                 chk.valid, chk.violation, -cfg.violation_tol))
            except lab.SearchExhausted:
                out.append(truth(f"certificate_{name}_lam{lam:g}", "nonmonotone.certificate", False))

    cfg = lab.SearchConfig(seed=seed)
    cert = lab.build_counterexample("u_minus_exp_phi", cfg)
    diff = (cert.A - cert.B) - (apply_fn(cert.A, exp_phi_fn()) - apply_fn(cert.B, exp_phi_fn()))
    out.append(leq("lipschitz_order_fails_for_matrices", "nonmonotone.lipschitz_order",
                   float(np.linalg.eigvalsh(diff)[0]), -cfg.violation_tol, 0.0))

    lf = log_phi_fn()
    mono = lab.monotone_sanity(lf, trials, cfg)
    out.append(leq("log_phi_monotone_trials", "operator.log_phi_monotone", -mono.worst_slack, 0.0, 1e-8))
    conc = lab.concavity_sanity(lf, trials, cfg)
    out.append(leq("log_phi_concave_trials", "operator.log_phi_concave", -conc.worst_slack, 0.0, 1e-8))
    ident = lab.monotone_sanity(identity_fn(), 100, cfg)
    out.append(truth("identity_monotone_trials", "operator.sanity", ident.ok, ident.failures, 0))
    near = lab.monotone_sanity(u_minus_exp_phi_fn(), 50, cfg, near=cert)
    out.append(truth("u_minus_exp_phi_fails_near_certificate", "nonmonotone.sanity",
                     near.failures >= 1, near.failures, 1))
    return out


SUITES: Dict[str, Callable[..., List[Check]]] = {
    "scalar": scalar_suite,
    "operator": operator_suite,
    "state": state_suite,
    "lab": lab_suite,
}


def run_suite(name: str, seed: int = 0, trials=None) -> List[Check]:
    """Run one suite, or all of them in fixed order for ``name == "all"``."""
    names = list(SUITES) if name == "all" else [name]
    out: List[Check] = []
    for nm in names:
        fn = SUITES[nm]
        checks = fn(seed) if trials is None else fn(seed, trials)
        out.extend(Check(f"{nm}.{c.name}", c.tag, c.status, c.lhs, c.rhs, c.tolerance) for c in checks)
    return out
