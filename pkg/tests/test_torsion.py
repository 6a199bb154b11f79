import numpy as np
import pytest
from scipy.integrate import quad

from torsionlab import fixtures
from torsionlab.flat_complex import point_data
from torsionlab.torsion import (
    bl_torsion,
    check_dmz6,
    check_dmz7,
    degree0_bl,
    degree0_T,
    integrand_T,
    integrate_T_field,
    torsion_report,
    torsion_T,
    torsion_T_tilde,
)

PTS = np.array([[0.4, 1.7], [2.9, 5.1], [4.4, 0.2]])


@pytest.mark.parametrize("name", ["rank11", "rank22", "const22", "gauge22"])
@pytest.mark.parametrize("r", [0.0, 0.5, 1.0])
def test_degree0_law(name, r):
    spec = getattr(fixtures, name)()
    T = torsion_T(spec, r, x=PTS)
    assert np.abs(T.coeffs[..., 0] - spec.str_number / (1 + r * r)).max() < 1e-8
    assert degree0_T(spec, r) == spec.str_number / (1 + r * r)


def test_rank11_degree0_closed_form(rank11):
    for r in (0.0, 0.5, 1.0):
        assert abs(torsion_T(rank11, r, x=PTS[:1]).coeffs[0, 0] + 1 / (1 + r * r)) < 1e-8


@pytest.mark.parametrize("name", ["rank11", "rank22", "gauge22"])
def test_bl_degree0_is_logdet(name):
    spec = getattr(fixtures, name)()
    pd = point_data(spec, PTS)
    B = bl_torsion(pd)
    assert np.abs(B.coeffs[..., 0] - degree0_bl(pd)).max() < 1e-6


def test_plain_integral_agrees_where_convergent(rank22):
    # the degree-0 integrand is O(t) at t = 0, so -int F dt/t converges
    pd = point_data(rank22, PTS[:1])
    f = lambda t: integrand_T(pd, t, 0.5).coeffs[0, 0, 0].real / t  # noqa: E731
    direct = -(quad(f, 0, 1, epsabs=1e-13, epsrel=1e-13)[0] + quad(f, 1, np.inf, epsabs=1e-13, epsrel=1e-13)[0])
    reg = torsion_T(pd, 0.5).coeffs[0, 0]
    assert abs(direct - reg) < 1e-8


def test_const_metric_has_no_positive_degree(const22):
    rep = torsion_report(const22, PTS, 0.7)
    for which in ("T", "T_tilde", "bl"):
        for i in (1, 2):
            assert np.abs(rep.degree(which, i)).max() < 1e-12


@pytest.mark.parametrize("r", [0.0, 1.0])
def test_dmz7_ratio_two_thirds(rank22, r):
    res = check_dmz7(rank22, r, 2, x=PTS)
    assert not res.vacuous
    assert np.abs(res.lhs).min() > 1e-6
    assert res.error < 1e-4
    assert np.allclose(res.ratio, 2 / 3, atol=1e-4)


def test_dmz7_rejects_odd_degree(rank22):
    with pytest.raises(ValueError):
        check_dmz7(rank22, 0.0, 1, x=PTS)


@pytest.mark.parametrize("form", ["scaled", "same_t"])
def test_dmz6_consistent_forms(rank22, form):
    for t in (0.5, 1.0, 2.0):
        for r in (0.0, 1.0):
            resid, scale = check_dmz6(rank22, PTS[0], t, r, form=form)
            assert resid < 1e-6, (t, r, resid)


def test_dmz6_literal_form_is_inconsistent(rank22):
    resid, scale = check_dmz6(rank22, PTS[0], 1.0, 1.0, form="literal")
    assert resid > 1e-2


def test_integrated_tilde_is_twice_T(rank22):
    a = integrate_T_field(rank22, 0.0, n=8)
    b = integrate_T_field(rank22, 0.0, n=8, which="T_tilde")
    assert abs(b - 2 * a) < 1e-5
    assert abs(a) > 1e-2


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0])
def test_T_tilde_degree0_is_twice_T(rank22, r):
    # exact forms have no degree-0 part, so T~ = 2 T holds pointwise there
    T = torsion_T_tilde(rank22, r, x=PTS)
    assert np.abs(T.coeffs[..., 0] - 2 * degree0_T(rank22, r)).max() < 1e-8


def test_report_serializes(rank11):
    d = torsion_report(rank11, PTS[:2], 0.0).to_dict()
    assert set(d) == {"r", "x", "T", "T_tilde", "bl", "diagnostics"}
    assert len(d["T"]["1"]) == 2
