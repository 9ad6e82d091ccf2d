"""The ten acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""
import math
import time

import numpy as np
import pytest

from otocsim.dynamics import XXZParams, build_xxz, trotter_slope
from otocsim.harness import (
    agreement_residuals,
    identity_residuals,
    paper_default_config,
    run_sweep,
    table_to_csv,
)
from otocsim.oracle import OTOCSpec, otoc_c, size_identity_check
from otocsim.protocols import (
    ISMConfig,
    RTMConfig,
    WMMConfig,
    irreversibility_delta,
    ism_channels,
    ism_exact,
    kraus_operator,
    modified_eigenvalue,
    povm_residuals,
    rtm_exact,
    wmm_exact,
)
from otocsim.qcore import DensityMatrix, X, Y, Z, embed_local, partial_trace, von_neumann_entropy
from otocsim.thermal import (
    GibbsSpec,
    OptimizerConfig,
    TFDAnsatz,
    exact_gibbs,
    free_energy,
    vqa_optimize,
)

from conftest import ACCEPTANCE_LINES

TAUS = (0.3, 0.7, 1.4)
THETAS = (0.2, 0.1, 0.05)
PHI_SET = (math.pi / 8, math.pi / 4, math.pi / 2)


def report(number: int, passed: bool, detail: str):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert passed, line


def spec(n, tau, beta=1.0, delta=0.5):
    op = embed_local(X, [0], n)
    return OTOCSpec(build_xxz(XXZParams.tied_field(n, delta)), beta, op, op, tau)


def fitted_exponent(thetas, errors):
    return float(np.polyfit(np.log(thetas), np.log(errors), 1)[0])


@pytest.fixture(scope="module")
def default_sweep():
    cfg = paper_default_config()
    tables, seconds = {}, {}
    for protocol in cfg.protocols:
        start = time.perf_counter()
        tables[protocol] = run_sweep(cfg.__class__(**{**cfg.to_dict(), "protocols": [protocol]}))
        seconds[protocol] = time.perf_counter() - start
    return cfg, tables, seconds


def test_criterion_1_identity_suite():
    start = time.perf_counter()
    r_f, r_frob = identity_residuals(50, seed=1)
    elapsed = time.perf_counter() - start
    ok = r_f < 1e-10 and r_frob < 1e-10 and elapsed < 30
    report(1, ok, f"|C-2(1-ReF)|={r_f:.1e} |C-frob|={r_frob:.1e} in {elapsed:.1f}s")


def test_criterion_2_measurement_algebra():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for phi in PHI_SET:
        for A in (X, Y, Z, embed_local(Z, [1], 2)):
            worst = max(worst, max(povm_residuals(A, phi, rng).values()))
    proj = 0.0
    for A in (X, Z):
        for a in (0, 1):
            E = kraus_operator(A, math.pi / 2, a).conj().T @ kraus_operator(A, math.pi / 2, a)
            eig = (np.eye(2) + (-1) ** a * A) / 2
            proj = max(proj, np.max(np.abs(E - eig)), np.max(np.abs(E @ E - E)))
            proj = max(proj, abs(modified_eigenvalue(a, math.pi / 2) - (-1) ** a))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and proj < 1e-12 and elapsed < 5
    report(2, ok, f"identity residual {worst:.1e}, projective-limit residual {proj:.1e} in {elapsed:.2f}s")


def test_criterion_3_protocol_oracle_equivalence():
    start = time.perf_counter()
    worst = {"RTM": 0.0, "WMM": 0.0, "ISM": 0.0}
    phi_spread, exponents = 0.0, []
    for n in (2, 3):
        for name, r in agreement_residuals(n, 1.0, 0.5, TAUS, THETAS).items():
            worst[name] = max(worst[name], r)
        for tau in TAUS:
            s = spec(n, tau)
            c = otoc_c(s)
            values = [wmm_exact(WMMConfig(s, (phi,) * 4)) for phi in PHI_SET]
            phi_spread = max(phi_spread, max(values) - min(values))
            bias = [abs(ism_exact(ISMConfig(s, t)) - c) for t in THETAS]
            exponents.append(fitted_exponent(THETAS, bias))
    elapsed = time.perf_counter() - start
    ok = (worst["RTM"] < 1e-8 and worst["WMM"] < 1e-8 and worst["ISM"] < 1e-6 and phi_spread < 1e-9
          and all(abs(e - 2.0) <= 0.3 for e in exponents) and elapsed < 120)
    report(3, ok, f"RTM {worst['RTM']:.1e}, WMM {worst['WMM']:.1e}, ISM {worst['ISM']:.1e}, "
                  f"phi spread {phi_spread:.1e}, bias exponents {min(exponents):.2f}..{max(exponents):.2f} "
                  f"in {elapsed:.1f}s")


def test_criterion_4_irreversibility_route():
    s = spec(2, 0.7)
    c = otoc_c(s)
    ratios, shortcut = [], 0.0
    for theta in THETAS:
        cfg = ISMConfig(s, theta)
        d2 = irreversibility_delta(*ism_channels(cfg)) ** 2
        ratios.append(d2 / theta**2)
        x_out = 1.0 - 2.0 * theta**2 * ism_exact(cfg)  # ancilla <X> behind the limit estimator
        shortcut = max(shortcut, abs(d2 - (1.0 - x_out) / 2))
    errors = [abs(r - c) for r in ratios]
    exponent = fitted_exponent(THETAS, errors)
    ok = shortcut < 1e-9 and abs(exponent - 2.0) <= 0.3 and errors[-1] < errors[0]
    report(4, ok, f"delta^2/theta^2 -> C with exponent {exponent:.2f}, error at theta=0.05 "
                  f"{errors[-1]:.1e}, shortcut residual {shortcut:.1e}")


def test_criterion_5_operator_size_identity():
    H = build_xxz(XXZParams.tied_field(3, 0.5))
    W0 = embed_local(X, [0], 3)
    worst = max(abs(np.subtract(*size_identity_check(W0, H, tau, site)))
                for tau in (0.0, 0.5, 1.0) for site in range(3))
    report(5, worst < 1e-10, f"worst lhs-rhs {worst:.1e}")


def _within(table):
    rows = table.rows
    hits = [abs(r["mean_C"] - r["oracle_C"]) <= 3 * r["std_C"] / math.sqrt(r["reps"]) + 1e-12 for r in rows]
    return sum(hits) / len(rows)


def test_criterion_6_shot_noise_at_full_scale(default_sweep):
    cfg, tables, seconds = default_sweep
    parts, ok = [], True
    for protocol, table in tables.items():
        frac = _within(table)
        ok &= frac >= 0.9 and seconds[protocol] < 600 and len(table.rows) == 75
        parts.append(f"{protocol} {frac:.1%} in {seconds[protocol]:.0f}s")
    # for information only: the leading-order ISM estimator carries a theta bias
    limit_cfg = cfg.__class__(**{**cfg.to_dict(), "protocols": ["ISM"], "ism_estimator": "limit"})
    limit_frac = _within(run_sweep(limit_cfg))
    print(f"info: ISM with the theta -> 0 estimator at theta={cfg.theta}: {limit_frac:.1%} of cells within 3 SE")
    report(6, ok, ", ".join(parts) + " within 3 SE")


def test_criterion_7_ism_variance_exceeds_rtm(default_sweep):
    _, tables, _ = default_sweep
    med = {p: float(np.median([r["std_C"] for r in tables[p].rows])) for p in ("RTM", "ISM")}
    report(7, med["ISM"] > med["RTM"], f"median std_C ISM {med['ISM']:.3f} > RTM {med['RTM']:.3f}")


def test_criterion_8_gibbs_vqa():
    start = time.perf_counter()
    H = build_xxz(XXZParams.tied_field(2, 0.5))
    gspec = GibbsSpec(H, 1.0)
    res = vqa_optimize(gspec, TFDAnsatz(2, 2, 3), OptimizerConfig(max_evals=20000, seed=1))
    rho = res.prepared_state().to_density()
    s_a = von_neumann_entropy(partial_trace(rho, [0, 1]))
    s_s = von_neumann_entropy(partial_trace(rho, [2, 3]))
    f_min = free_energy(exact_gibbs(gspec), H, 1.0)
    rng = np.random.default_rng(8)
    gap = math.inf
    for _ in range(100):
        rank = int(rng.integers(1, 5))
        g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
        m = g @ g.conj().T
        gap = min(gap, free_energy(DensityMatrix(m / np.trace(m)), H, 1.0) - f_min)
    elapsed = time.perf_counter() - start
    ok = res.fidelity_to_exact >= 0.99 and abs(s_a - s_s) < 1e-9 and gap >= -1e-12 and elapsed < 300
    report(8, ok, f"fidelity {res.fidelity_to_exact:.4f}, |S_A-S_S|={abs(s_a - s_s):.1e}, "
                  f"min free-energy gap {gap:.2e} in {elapsed:.0f}s")


def test_criterion_9_trotter_order():
    H = build_xxz(XXZParams.tied_field(4, 0.5))
    slope, _ = trotter_slope(H, 2.1, 2, (10, 20, 50, 100))
    report(9, abs(slope - 2.0) <= 0.3, f"order-2 slope {slope:.3f}")


def test_criterion_10_determinism(default_sweep):
    cfg, tables, _ = default_sweep
    first = table_to_csv(run_sweep(cfg)).encode()
    second = table_to_csv(run_sweep(cfg)).encode()
    per_protocol = b"".join(table_to_csv(tables[p]).encode().split(b"\n", 1)[1] for p in cfg.protocols)
    ok = first == second and first.split(b"\n", 1)[1] == per_protocol
    report(10, ok, f"two sweeps give byte-identical CSV ({len(first)} bytes)")
