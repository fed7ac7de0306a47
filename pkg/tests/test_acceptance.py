"""End-to-end acceptance gate.

Each test covers one headline property of the library, prints a single
PASS/FAIL line with its key metrics, and asserts the stated tolerances.
"""

import itertools
import math
import time

import numpy as np
import pytest

from masspoly import (
    GenJacobiSpec,
    GridFunction,
    LaguerreSpec,
    LorentzIndex,
    MassPoint,
    MeasureSpec,
    check_conditions,
    legendre,
    lorentz_norm,
    make_grid,
)
from masspoly.norms import (
    bmo_symbols,
    commutator_probe,
    strong_probe,
    weak_type_probe,
)
from masspoly.opoly import (
    basis_for,
    gauss_points,
    kernel_decomposition,
    kernel_envelope_ratio,
    modified_bases,
    monomial_coefficients,
    recurrence_for,
)
from masspoly.oracle import oracle_orthonormal_coefficients
from masspoly.transforms import (
    commutator_psi_parts,
    fit_pollard_coefficients,
    laguerre_mass_table,
    laguerre_q_at_zero,
    laguerre_q_values,
    pollard_parts,
    q_basis_for,
)


def report(num, ok, details):
    print(f"\n[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {details}")
    assert ok, details


def gram_residual(spec, N):
    basis = basis_for(spec, N)
    rec = recurrence_for(spec.base, 2 * N + 10)
    xs, ws = gauss_points(rec, 2 * N + 10)
    if spec.masses:
        xs = np.concatenate([xs, [mp.location for mp in spec.masses]])
        ws = np.concatenate([ws, [mp.mass for mp in spec.masses]])
    phi = basis.eval_all(xs, N)
    G = (phi * ws) @ phi.T
    return np.abs(G - np.eye(N + 1)).max()


def test_criterion_1_orthonormality():
    t0 = time.time()
    masses = (MassPoint(-1.0, 0.5), MassPoint(0.3, 0.25), MassPoint(1.0, 0.5))
    worst = 0.0
    for alpha, beta in itertools.product((-0.5, 0.0, 0.5), repeat=2):
        spec = MeasureSpec(GenJacobiSpec(alpha, beta, ((0.0, 1.0),)), masses)
        worst = max(worst, gram_residual(spec, 50))
    elapsed = time.time() - t0
    ok = worst < 1e-10 and elapsed < 10.0
    report(1, ok, f"max Gram residual {worst:.3e} over 9 configs, {elapsed:.1f}s")


ORACLE_CONFIGS = [
    legendre(),
    MeasureSpec(GenJacobiSpec(1.0, 0.0)),
    MeasureSpec(GenJacobiSpec(2.0, 1.0)),
    MeasureSpec(GenJacobiSpec(0.0, 0.0, ((0.0, 2.0),))),
    legendre([MassPoint(1.0, 1.0)]),
    legendre([MassPoint(-1.0, 0.5), MassPoint(1.0, 0.5)]),
    MeasureSpec(GenJacobiSpec(1.0, 1.0), (MassPoint(0.5, 0.25),)),
    MeasureSpec(LaguerreSpec(0.0), (MassPoint(0.0, 1.0),)),
]


def test_criterion_2_oracle_equivalence():
    t0 = time.time()
    N = 10
    worst = 0.0
    for spec in ORACLE_CONFIGS:
        C_exact = oracle_orthonormal_coefficients(spec, N)
        C_lib = monomial_coefficients(basis_for(spec, N))[: N + 1, : N + 1]
        scale = np.abs(C_exact).max(axis=1)
        worst = max(worst, float(np.max(np.abs(C_exact - C_lib) / scale[:, None])))
    elapsed = time.time() - t0
    ok = worst < 1e-12 and elapsed < 5.0
    report(2, ok, f"max relative coefficient error {worst:.3e} over "
                  f"{len(ORACLE_CONFIGS)} rational configs, N={N}, {elapsed:.1f}s")


def test_criterion_3_kernel_decomposition():
    specs = {
        1: legendre([MassPoint(1.0, 1.0)]),
        2: legendre([MassPoint(-1.0, 0.5), MassPoint(1.0, 1.0)]),
    }
    worst_res, worst_sum = 0.0, 0.0
    coeff_ok = True
    for k, spec in specs.items():
        basis = basis_for(spec, 30)
        mods = modified_bases(spec, 30)
        for n in range(k, 31):
            dec = kernel_decomposition(basis, mods, n)
            worst_res = max(worst_res, dec.residual)
            worst_sum = max(worst_sum, abs(dec.total - 1.0))
            coeff_ok = coeff_ok and all(0.0 < c < 1.0 for c in dec.coefficients.values())
    ok = worst_res < 1e-8 and worst_sum < 1e-8 and coeff_ok
    report(3, ok, f"max residual {worst_res:.3e}, max |sum-1| {worst_sum:.3e}, "
                  f"coefficients in (0,1): {coeff_ok}, k in {{1,2}}, n <= 30")


def test_criterion_4_kernel_estimates():
    details = []
    ok = True
    for a in (1.0, 0.3):
        basis = basis_for(legendre([MassPoint(a, 1.0)]), 200)
        sups = kernel_envelope_ratio(basis, a, 200)
        drift = sups[200] / sups[100] - 1.0
        ok = ok and np.isfinite(sups[200]) and drift < 0.10
        details.append(f"a={a}: sup {sups[200]:.3f}, drift N=100->200 {100 * drift:.2f}%")
    report(4, ok, "; ".join(details))


def test_criterion_5_pollard():
    spec = legendre([MassPoint(1.0, 1.0)])
    nu_basis = basis_for(spec, 42)
    q_basis = q_basis_for(nu_basis)
    f = np.polynomial.Polynomial([0.3, -1.0, 0.0, 0.4, 0.0, -0.2])
    x = np.linspace(-0.85, 0.85, 15)
    worst = 0.0
    for n in (5, 10, 20, 30, 40):
        parts = pollard_parts(nu_basis, q_basis, f, n, x)
        worst = max(worst, parts.residual)
    r40, s40, _ = fit_pollard_coefficients(nu_basis, q_basis, 40)
    ok = worst < 1e-8 and abs(r40 + 0.5) < 0.05 and abs(s40 - 0.5) < 0.05
    report(5, ok, f"max reconstruction residual {worst:.3e} (n <= 40), "
                  f"r_40 = {r40:.4f} (target -1/2), s_40 = {s40:.4f} (target 1/2)")


def test_criterion_6_mean_convergence_window():
    spec = legendre([MassPoint(1.0, 1.0)])
    N = 200
    basis = basis_for(spec, N)
    grid = make_grid(spec, 3 * N)
    details = []
    ok = True
    for p, expect in [(1.25, "growing"), (1.5, "bounded"), (2.0, "bounded"),
                      (3.0, "bounded"), (4.5, "growing")]:
        t0 = time.time()
        rep = strong_probe(basis, grid, p, N=N)
        elapsed = time.time() - t0
        cond = check_conditions(spec, rep_u(), rep_u(), p).verdict
        agrees = cond == (rep.verdict == "bounded")
        ok = ok and rep.verdict == expect and agrees and elapsed < 120.0
        details.append(f"p={p}: {rep.verdict} (gamma={rep.gamma:.4f}, {elapsed:.0f}s)")
    report(6, ok, "; ".join(details))


def rep_u():
    from masspoly import PowerWeightSpec

    return PowerWeightSpec()


def test_criterion_7_endpoint_p4():
    spec = legendre([MassPoint(1.0, 1.0)])
    N = 200
    basis = basis_for(spec, N)
    grid = make_grid(spec, 3 * N)
    strong = strong_probe(basis, grid, 4.0, N=N)
    weak = weak_type_probe(basis, grid, 4.0, N=N, restricted=True)
    upto = lambda cap: max(v for n, v in weak.entries if n <= cap)
    drift = upto(200) / upto(100) - 1.0
    ok = strong.verdict == "growing" and weak.verdict == "bounded" and abs(drift) < 0.15
    report(7, ok, f"strong p=4 {strong.verdict} (gamma={strong.gamma:.4f}); "
                  f"restricted-weak {weak.verdict}, max-ratio drift N=100->200 "
                  f"{100 * drift:.2f}%")


def test_criterion_8_commutator():
    spec = legendre([MassPoint(0.3, 1.0)])
    N = 120
    basis = basis_for(spec, N)
    grid = make_grid(spec, 3 * N)
    b = bmo_symbols()["log_edge"]
    rep = commutator_probe(basis, grid, b, 2.0, N=N)

    mu_basis = basis_for(legendre(), 22)
    q_basis = q_basis_for(mu_basis)
    f = np.polynomial.Polynomial([1.0, 0.5, -0.25, 0.0, 0.1])
    parts = commutator_psi_parts(
        mu_basis, q_basis, b, f, 20, np.linspace(-0.8, 0.8, 9), b_singularities=(1.0,)
    )
    resid = float(np.max(np.abs(parts.reconstruction - parts.direct)))
    ok = rep.verdict == "bounded" and resid < 1e-7
    report(8, ok, f"probe verdict {rep.verdict} (gamma={rep.gamma:.4f}, n <= {N}); "
                  f"psi-split residual {resid:.3e} at n=20")


def test_criterion_9_laguerre_mass():
    details = []
    ok = True
    for alpha in (0.0, 1.0):
        ns, l_diag, q0, r, scaled = laguerre_mass_table(alpha, 1.0, 200)
        band = scaled[20:201]
        ratio = float(np.max(band) / np.min(band))
        nondec = bool(np.all(np.diff(l_diag) >= -1e-12))
        tail = l_diag[200] / l_diag[100]
        qerr = float(np.max(np.abs(
            laguerre_q_values(alpha, 30, 0.0)[:, 0] - laguerre_q_at_zero(alpha, np.arange(31))
        )))
        ok = ok and ratio < 3.0 and nondec and tail < 1.05 and qerr < 1e-9
        details.append(f"alpha={alpha:g}: band ratio {ratio:.3f}, "
                       f"L_200/L_100 = {tail:.4f}, Q_n(0) err {qerr:.1e}")
    report(9, ok, "; ".join(details))


def test_criterion_10_lorentz():
    spec = legendre([MassPoint(0.3, 1.0)])
    grid = make_grid(spec, 240)
    rng = np.random.default_rng(0)
    m = grid.size
    worst = 0.0
    for p, r in [(4.0, 1.0), (4.0, math.inf), (2.0, 2.0)]:
        for _ in range(20):
            mask = rng.random(m) < rng.uniform(0.05, 0.9)
            if not mask.any():
                mask[0] = True
            nu_E = float(np.sum(grid.weights[mask]))
            val = lorentz_norm(GridFunction(grid, mask.astype(float)), LorentzIndex(p, r))
            worst = max(worst, abs(val - nu_E ** (1.0 / p)))
    violations = 0
    for _ in range(100):
        f = GridFunction(grid, rng.standard_normal(m) * (1.0 + 10 * rng.random(m)))
        a = lorentz_norm(f, LorentzIndex(4.0, 1.0))
        b = lorentz_norm(f, LorentzIndex(4.0, 4.0))
        c = lorentz_norm(f, LorentzIndex(4.0, math.inf))
        if not (c <= b * (1 + 1e-12) and b <= a * (1 + 1e-12)):
            violations += 1
    ok = worst < 1e-12 and violations == 0
    report(10, ok, f"characteristic-function identity max error {worst:.3e} "
                   f"(60 sets); nesting violations {violations}/100")
