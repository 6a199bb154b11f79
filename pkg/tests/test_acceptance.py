"""Acceptance criteria 1-8.

Each test prints exactly one ``PASS``/``FAIL`` line for its criterion (plus
``INFO`` lines with supporting numbers) and then asserts.  Run standalone with
``python tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest
from scipy.special import gamma

from torsionlab import fixtures
from torsionlab.adiabatic import (
    ExperimentConfig,
    TorusDiscretization,
    _spectral_data,
    assemble_operator,
    delta_u,
    extrapolate,
    lattice_offset,
    run_experiment,
    small_t_structure,
)
from torsionlab.asymptotics import regularized_time_integral
from torsionlab.exterior import FormContext
from torsionlab.flat_complex import point_data
from torsionlab.superconnection import check_identities
from torsionlab.supermatrix import (
    GradedSpace,
    SuperElement,
    supercommutator,
    superexp,
    superexp_taylor,
    supertrace,
)
from torsionlab.torsion import (
    bl_torsion,
    check_dmz6,
    check_dmz7,
    degree0_bl,
    integrate_T_field,
    torsion_T,
)

SEED = 20240611


@pytest.fixture()
def say(capsys):
    def emit(line):
        with capsys.disabled():
            print(line)

    return emit


def verdict(say, k, ok, msg):
    say(f"{'PASS' if ok else 'FAIL'} criterion {k}: {msg}")
    return ok


def points(spec, m, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 2 * np.pi, (m, spec.p))


# 1 -------------------------------------------------------------------------


def _random_element(ctx, space, rng, parity, scale):
    shape = (ctx.dim, space.dim, space.dim)
    e = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    A = SuperElement(ctx, space, scale * e)
    return A.even_part() if parity == 0 else A.odd_part()


def test_criterion1_graded_algebra(say):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    ctx = FormContext(2)
    worst_comm = worst_exp = 0.0
    for _ in range(50):
        space = GradedSpace(tuple(int(k) for k in rng.integers(1, 4, size=3)))
        for pa in (0, 1):
            for pb in (0, 1):
                A = _random_element(ctx, space, rng, pa, 1.0)
                B = _random_element(ctx, space, rng, pb, 1.0)
                s = supertrace(supercommutator(A, B)).norm()
                worst_comm = max(worst_comm, s / (A.norm() * B.norm()))
        X = _random_element(ctx, space, rng, 0, 0.5)
        ref = superexp_taylor(X, 60)
        worst_exp = max(worst_exp, (superexp(X) - ref).norm() / max(ref.norm(), 1.0))
    dt = time.perf_counter() - t0
    ok = worst_comm <= 1e-12 and worst_exp <= 1e-10 and dt < 10
    assert verdict(say, 1, ok, f"str[A,B]/(|A||B|) max {worst_comm:.2e} (<=1e-12), "
                               f"superexp vs Taylor {worst_exp:.2e} (<=1e-10), {dt:.1f}s (<10s)")


# 2 -------------------------------------------------------------------------


def test_criterion2_identities(say):
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for name in ("rank11", "rank22", "gauge22"):
        spec = fixtures.load_bundled(name)
        for x in points(spec, 10, SEED):
            for u in (0.25, 1.0, 4.0, 16.0):
                for r in (0.0, 0.5, 1.0):
                    res = check_identities(spec, x, u, r, n=48)
                    key = max(res, key=res.get)
                    if res[key] > worst:
                        worst, where = res[key], (name, key, u, r)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 60
    assert verdict(say, 2, ok, f"worst identity residual {worst:.2e} (<=1e-8) at {where}, "
                               f"360 cases per fixture set in {dt:.1f}s (<60s)")


# 3 -------------------------------------------------------------------------


def test_criterion3_closed_forms(say):
    t0 = time.perf_counter()
    worst_law = worst_bl = worst_11 = 0.0
    for name in ("rank11", "rank22", "const22", "gauge22", "rank22_p4", "rank33_p4"):
        spec = fixtures.load_bundled(name)
        pd = point_data(spec, points(spec, 3 if spec.p == 2 else 2, SEED))
        for r in (0.0, 0.5, 1.0):
            T0 = torsion_T(pd, r).coeffs[..., 0]
            worst_law = max(worst_law, np.abs(T0 - spec.str_number / (1 + r * r)).max())
            if name == "rank11":
                worst_11 = max(worst_11, np.abs(T0 + 1 / (1 + r * r)).max())
        if spec.p == 2:
            B0 = bl_torsion(pd).coeffs[..., 0]
            worst_bl = max(worst_bl, np.abs(B0 - degree0_bl(pd)).max())
    dt = time.perf_counter() - t0
    ok = worst_law <= 1e-8 and worst_11 <= 1e-8 and worst_bl <= 1e-6 and dt < 60
    assert verdict(say, 3, ok, f"degree-0 law {worst_law:.2e}, rank11 -1/(1+r^2) {worst_11:.2e} (<=1e-8); "
                               f"BL degree 0 vs logdet {worst_bl:.2e} (<=1e-6); {dt:.1f}s (<60s)")


# 4 -------------------------------------------------------------------------


def test_criterion4_dmz7(say):
    spec = fixtures.load_bundled("rank22")
    x = points(spec, 10, SEED)
    err, dev, mag = 0.0, 0.0, np.inf
    for r in (0.0, 1.0):
        res = check_dmz7(spec, r, 2, x=x)
        err = max(err, res.error)
        dev = max(dev, np.nanmax(np.abs(res.ratio - 2 / 3)))
        mag = min(mag, np.abs(res.lhs).min())
    p4 = fixtures.load_bundled("rank33_p4")
    res4 = check_dmz7(p4, 1.0, 4, x=points(p4, 3, SEED))
    dev4 = np.nanmax(np.abs(res4.ratio - 8 / 5))
    ok = err <= 1e-4 and mag >= 1e-6 and not res4.vacuous and res4.error <= 1e-4
    say(f"INFO criterion 4: p=4 (rank33_p4) i=4 r=1 ratio deviation from 8/5 {dev4:.2e}, "
        f"min |T^[4]| {np.abs(res4.lhs).min():.2e}")
    assert verdict(say, 4, ok, f"i=2 componentwise error {err:.2e} (<=1e-4), ratio-2/3 {dev:.2e}, "
                               f"min component {mag:.2e} (>=1e-6); p=4 factor 8/5 error {res4.error:.1e}")


# 5 -------------------------------------------------------------------------


def test_criterion5_dmz6(say):
    spec = fixtures.load_bundled("rank22")
    worst = 0.0
    for x in points(spec, 3, SEED):
        for t in (0.5, 1.0, 2.0):
            for r in (0.0, 1.0):
                worst = max(worst, check_dmz6(spec, x, t, r)[0])
    a = integrate_T_field(spec, 0.0, n=8)
    b = integrate_T_field(spec, 0.0, n=8, which="T_tilde")
    gap = abs(b - 2 * a)
    ok = worst <= 1e-6 and gap <= 1e-5
    assert verdict(say, 5, ok, f"pointwise residual {worst:.2e} (<=1e-6); "
                               f"|int T~ - 2 int T| = {gap:.2e} (<=1e-5), int T^[2] = {a.real:.6f}")


# 6 -------------------------------------------------------------------------


def test_criterion6_adiabatic_limit(say):
    t0 = time.perf_counter()
    spec = fixtures.load_bundled("rank22")
    cfg = ExperimentConfig(u_schedule=(16.0, 64.0, 256.0), n=24, n_refine=32, rhs_grid=16)
    rep = run_experiment(spec, cfg)
    t_main = time.perf_counter() - t0
    e24, e32 = rep.errors["24"], rep.errors["32"]
    d24, d32 = np.array(rep.delta["24"]), np.array(rep.delta["32"])

    # null test
    null = fixtures.load_bundled("const22")
    nrep = run_experiment(null, ExperimentConfig(n=24, n_refine=None, rhs_grid=8))
    b = assemble_operator(null, TorusDiscretization(24), 16.0, 0.0)
    # Y is G-odd, so its norm is the larger of its two off-diagonal blocks
    y_norm = max(np.linalg.norm(b.Y1, 2), np.linalg.norm(b.Y2, 2))
    scale = y_norm / np.linalg.svd(b.B, compute_uv=False).min()
    null_ok = abs(nrep.extrapolated["24"]) <= 1e-3 * scale and abs(nrep.rhs) <= 1e-3 * scale
    dt = time.perf_counter() - t0

    rhs = rep.rhs
    say(f"INFO criterion 6: int T^[2] = {rhs.real:.6f}; (1/2) lim delta: N=24 {0.5 * rep.extrapolated['24'].real:.6f}, "
        f"N=32 {0.5 * rep.extrapolated['32'].real:.6f}")
    say(f"INFO criterion 6: delta_u N=24 {np.round(d24.real, 5).tolist()}, N=32 {np.round(d32.real, 5).tolist()}")
    # lattice plateau correction (documented estimator), reported for comparison only;
    # N=24 only, a full SVD at N=32 costs minutes
    corr = {}
    for n, d in (("24", d24),):
        off, _, _ = lattice_offset(spec, TorusDiscretization(int(n)), 0.0, 1.0, 0.3)
        corr[n] = extrapolate(rep.u, d - off)[0]
    say("INFO criterion 6: corrected estimator (1/2) lim delta / int T^[2]: "
        + ", ".join(f"N={n} {0.5 * z.real / rhs.real:+.3f}" for n, z in corr.items())
        + " (expected +1 as specified; +2 with L degree 0 = 2^{p/2})")
    ok = e24 <= 0.05 and e32 < e24 and null_ok and dt <= 600
    assert verdict(say, 6, ok, f"relative error N=24 {e24:.3f} (<=0.05), N=32 {e32:.3f} (must decrease); "
                               f"null |lhs| {abs(nrep.extrapolated['24']):.1e}, |rhs| {abs(nrep.rhs):.1e} "
                               f"(<=1e-3 x {scale:.1f}); main run {t_main:.0f}s, total {dt:.0f}s (<=600s)")


# 7 -------------------------------------------------------------------------


def test_criterion7_small_t_structure(say):
    spec = fixtures.load_bundled("rank22")
    b = assemble_operator(spec, TorusDiscretization(24), 16.0, 0.0)
    sd = _spectral_data(b)
    fit = small_t_structure(b, spectral=sd)
    c0 = fit.coefficient(0)
    sing = max(abs(fit.coefficient(-1)), abs(fit.coefficient(-2))) / abs(c0)
    res = delta_u(b, "resolvent", spectral=sd)
    heat = delta_u(b, "heat", spectral=sd)
    gap = abs(res.value - heat.value)
    ok = sing <= 1e-4 and gap <= 1e-8
    assert verdict(say, 7, ok, f"max |c_-j|/|c_0| = {sing:.1e} (<=1e-4, c_0 = {c0.real:.3f}); "
                               f"resolvent vs heat {gap:.1e} (<=1e-8)")


# 8 -------------------------------------------------------------------------


def test_criterion8_regularized_oracle(say):
    # F(t) = t^e e^{-t}: zeta'(0) of -Gamma(s)^{-1} Gamma(s + e) is -Gamma(e) (0 for e = 0)
    cases = [(1.0, lambda t: t * np.exp(-t)), (0.0, lambda t: np.exp(-t)),
             (-0.5, lambda t: t**-0.5 * np.exp(-t))]
    errs = []
    parts = []
    for e, fn in cases:
        reg = regularized_time_integral(fn, t_max=60.0)
        exact = 0.0 if e == 0 else -gamma(e)
        errs.append(abs(complex(reg.value) - exact))
        parts.append(f"{complex(reg.value).real:+.10f}")
    ok = max(errs) <= 1e-8
    assert verdict(say, 8, ok, f"t e^-t, e^-t, t^-1/2 e^-t -> {', '.join(parts)} "
                               f"(oracle -1, 0, 2 sqrt(pi)); max error {max(errs):.1e} (<=1e-8)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
