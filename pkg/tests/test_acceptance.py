"""Acceptance criteria 1-9 at their stated tolerances; each prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from patholab import harmonics, norms
from patholab.asymptotics import (
    RKernelInput,
    R_closed_form,
    R_eval,
    kappa_discrepancy_report,
    profile_match,
)
from patholab.cli import main
from patholab.coefficients import dini_growth_fit, ellipticity_bounds
from patholab.families import FamilyParams, alpha_values
from patholab.identity import identity_residual_sweep, matched_alpha
from patholab.nonuniqueness import RadialBVP, linearity_check, nontriviality_certificate, solve_bounded_branch
from patholab.weak_form import TestFunction as Bump, decay_fit, weak_form_check

LOG_FAMILIES = ("w11", "lipschitz-log", "bmo-logsq")
LLOGL = norms.Functional.llogl().label


def family(name, n, beta=2.0, a=0.5):
    return FamilyParams(
        name, n, beta=beta if name == "w11" else None, a=a if name == "power" else None
    ).resolve(0.5)


@pytest.fixture
def verdict(capsys):
    def emit(k, failures, summary=""):
        line = f"criterion {k}: {'PASS' if not failures else 'FAIL'} {summary}".rstrip()
        if failures:
            line += " | " + "; ".join(failures)
        with capsys.disabled():
            print("\n" + line)
        assert not failures, line

    return emit


def test_criterion_1_identity(verdict):
    start = time.perf_counter()
    failures = []
    worst, orders = 0.0, []
    for n in (2, 3):
        for name in LOG_FAMILIES + ("power",):
            p = family(name, n)
            rep = identity_residual_sweep(p, harmonics.x1(n), samples=1000, seed=1)
            worst = max(worst, rep.sup_analytic)
            orders.append(rep.convergence_order)
            if rep.sup_analytic > 1e-9:
                failures.append(f"{p.label} residual {rep.sup_analytic:.2e}")
            if not 1.7 <= rep.convergence_order <= 2.3:
                failures.append(f"{p.label} order {rep.convergence_order:.3f}")
            for pid in ("x1*x2", "zonal2"):
                P = harmonics.get(n, pid)
                r2 = identity_residual_sweep(p, P, samples=1000, seed=2, alpha=matched_alpha(p, 2))
                worst = max(worst, r2.sup_analytic)
                if r2.sup_analytic > 1e-9:
                    failures.append(f"{p.label} {pid} residual {r2.sup_analytic:.2e}")
    elapsed = time.perf_counter() - start
    if elapsed > 30:
        failures.append(f"runtime {elapsed:.1f}s")
    verdict(1, failures, f"max residual {worst:.1e}, orders {min(orders):.3f}..{max(orders):.3f}, {elapsed:.1f}s")


def test_criterion_2_ellipticity(verdict):
    failures = []
    for n in (2, 3):
        for name in LOG_FAMILIES:
            p = family(name, n)
            eb = ellipticity_bounds(p)
            if eb.lam < 0.5 - 1e-12 or eb.Lam > 2.0:
                failures.append(f"{p.label} lambda={eb.lam:.4f} Lambda={eb.Lam:.4f}")
    r0 = family("lipschitz-log", 2).r0
    rel = abs(r0 / math.exp(4) - 1)
    if rel > 1e-6:
        failures.append(f"Lipschitz r0 off by {rel:.1e}")
    verdict(2, failures, f"Lipschitz n=2 r0/e^4 - 1 = {rel:.1e}")


def test_criterion_3_weak_form(verdict):
    failures = []
    for n in (2, 3):
        phi = Bump((0.1, 0.05, -0.08)[:n], 0.6)
        for name in LOG_FAMILIES:
            p = family(name, n)
            for k in range(4, 21):
                chk = weak_form_check(phi, p, 2.0**-k)
                if chk.discrepancy > 1e-6 * abs(chk.boundary_term) + chk.quadrature_error_estimate:
                    failures.append(f"{p.label} k={k} discrepancy {chk.discrepancy:.2e}")
            fit = decay_fit(phi, p)
            if fit.verdict != "PASS" or fit.ratio_spread > 1.0:
                failures.append(f"{p.label} decay spread {fit.ratio_spread:.2f} ({fit.verdict})")
    beta_hat = decay_fit(Bump((0.1, 0.05), 0.6), family("w11", 2)).beta_hat
    if not 1.8 <= beta_hat <= 2.2:
        failures.append(f"beta_hat {beta_hat:.3f}")
    verdict(3, failures, f"beta_hat {beta_hat:.3f}")


def _rows(p):
    return {r.label: r for r in norms.membership_matrix(p)}


def test_criterion_4_membership(verdict):
    failures = []
    inconclusive = []

    def want(rows, label, verdict_, tag):
        got = rows[label].verdict
        if got != verdict_:
            failures.append(f"{tag} {label}: {got}, expected {verdict_}")

    for n in (2, 3):
        w15 = _rows(family("w11", n, beta=1.5))
        w25 = _rows(family("w11", n, beta=2.5))
        lip_p = family("lipschitz-log", n)
        lip = _rows(lip_p)
        bmo = _rows(family("bmo-logsq", n))
        for rows, tag in ((w15, "W11 1.5"), (w25, "W11 2.5"), (lip, "Lipschitz"), (bmo, "BMO")):
            inconclusive += [f"n={n} {tag} {k}" for k, r in rows.items() if r.verdict.upper() == "INCONCLUSIVE"]
            failures += [f"n={n} {tag} {k} mismatch" for k, r in rows.items() if r.match is False]
        want(w15, norms.Functional.lp(1.0).label, "CONVERGES", f"n={n} W11 1.5")
        want(w15, norms.Functional.lp(1.05).label, "DIVERGES", f"n={n} W11 1.5")
        want(w15, LLOGL, "DIVERGES", f"n={n} W11 1.5")
        want(w25, LLOGL, "CONVERGES", f"n={n} W11 2.5")
        for q in norms.DEFAULT_P_GRID:
            want(lip, norms.Functional.lp(q).label, "CONVERGES", f"n={n} Lipschitz")
        slope = norms.sup_growth(lip_p).slope
        if abs(slope / math.log(2.0) - 1) > 0.2:
            failures.append(f"n={n} Lipschitz sup slope {slope:.4f}")
        want(lip, "oscillation(centered)", "bounded", f"n={n} Lipschitz")
        for c in norms.DEFAULT_C_GRID:
            want(bmo, norms.Functional.exp(c).label, "DIVERGES", f"n={n} BMO")
        want(bmo, "oscillation(centered)", "unbounded", f"n={n} BMO")
        if bmo["oscillation(centered)"].details["slope"] <= 0:
            failures.append(f"n={n} BMO oscillation slope not positive")
    failures += [f"INCONCLUSIVE {s}" for s in inconclusive]
    verdict(4, failures, "W11 beta 1.5/2.5, Lipschitz, BMO rows match, n in {2,3}")


def test_criterion_5_oracles(verdict):
    failures = []
    worst = 0.0
    fn = norms.Functional.lp(1.5)
    for n, name in [(n, name) for n in (2, 3) for name in LOG_FAMILIES + ("power",)]:
        p = family(name, n)
        for j in range(1, 6):
            q = norms.annulus_functional(p, fn, j)
            m, se = norms.monte_carlo_annulus(p, fn, j, samples=20_000, seed=j)
            z = abs(q - m) / se
            worst = max(worst, z)
            if z > 3.0:
                failures.append(f"{p.label} j={j} z={z:.2f}")
    rel = []
    for n, a in ((2, 0.5), (3, -0.5)):
        p = family("power", n, a=a)
        t = norms.annulus_table(p, norms.Functional.lp(2.0), 20)
        fitted = float(np.exp(np.polyfit(t.j, t.log_partial, 1)[0]))
        rel.append(abs(fitted / norms.power_ratio(n, a, 2.0) - 1))
        if rel[-1] > 0.01:
            failures.append(f"power n={n} a={a} ratio off by {rel[-1]:.2e}")
    verdict(5, failures, f"max z {worst:.2f}, power ratio error {max(rel):.1e}")


def test_criterion_6_kernel(verdict):
    failures = []
    worst = 0.0
    rng = np.random.default_rng(6)
    for n in (2, 3):
        p = family("w11", n)
        rad = np.exp(rng.uniform(math.log(1e-6), math.log(0.9), 1000))
        g = rng.standard_normal((1000, n))
        X = rad[:, None] * g / np.linalg.norm(g, axis=1, keepdims=True)
        direct = np.array([R_eval(RKernelInput.from_family(p, x)) for x in X])
        closed = R_closed_form(alpha_values(p, rad), X)
        err = float(np.max(np.abs(direct - closed) / np.abs(direct)))
        worst = max(worst, err)
        if err > 1e-10:
            failures.append(f"n={n} kernel error {err:.2e}")
        pm = profile_match(p, np.geomspace(1e-6, 0.5, 200))
        if pm.max_rel_deviation > 1e-8:
            failures.append(f"n={n} profile deviation {pm.max_rel_deviation:.2e}")
        rep = kappa_discrepancy_report(n=n, samples=1000, seed=6)
        if rep.direct.size != 1000 or rep.alternative.size != 1000:
            failures.append(f"n={n} kappa report incomplete")
    verdict(6, failures, f"kernel error {worst:.1e}")


def test_criterion_7_nonuniqueness(verdict):
    failures = []
    for p in (family("w11", 2, beta=2.0), family("w11", 3, beta=1.5)):
        bvp = RadialBVP(p)
        sol = solve_bounded_branch(bvp)
        if sol.residual > 1e-8:
            failures.append(f"{p.label} residual {sol.residual:.2e}")
        if not -0.2 <= sol.local_exponent <= 0.2:
            failures.append(f"{p.label} exponent {sol.local_exponent:.3f}")
        cert = nontriviality_certificate(p, sol, eps_probe=1e-6)
        failures += [f"{p.label} {name}" for name in cert.failed]
        lin = linearity_check(bvp)
        if lin > 1e-10:
            failures.append(f"{p.label} linearity {lin:.2e}")
    verdict(7, failures, "W11 (2, 2) and (3, 1.5) certified")


def test_criterion_8_dini(verdict):
    failures = []
    r2 = []
    for n in (2, 3):
        for name in LOG_FAMILIES:
            p = family(name, n)
            fit = dini_growth_fit(p)
            r2.append(fit.r_squared)
            decades = math.log10(fit.deltas[0] / fit.deltas[-1])
            if fit.coefficient <= 0 or fit.r_squared < 0.99 or decades < 4:
                failures.append(f"{p.label} c={fit.coefficient:.3g} R2={fit.r_squared:.4f} decades={decades:.1f}")
            if np.any(fit.difference_ratios <= 0.5):
                failures.append(f"{p.label} geometric tail")
    verdict(8, failures, f"min R^2 {min(r2):.5f}")


def test_criterion_9_determinism(verdict, tmp_path, capsys):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["full-suite", "--n", "2", "--seed", "7", "--out", str(out)])
        outs.append((out / "report.json").read_bytes())
    capsys.readouterr()
    failures = [] if outs[0] == outs[1] else ["report.json differs between runs"]
    verdict(9, failures, f"{len(outs[0])} bytes identical")
