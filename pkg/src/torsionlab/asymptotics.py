"""Small-time expansions and zeta-regularized time integrals.

For an integrand ``F(t)`` with ``F(t) ~ sum_e A_e t^e`` as ``t -> 0`` and
exponential decay at infinity, set

    zeta(s) = -1/Gamma(s) int_0^inf t^{s-1} F(t) dt.

Splitting at ``a`` and continuing the model terms analytically gives

    zeta'(0) = -int_a^inf F dt/t - sum_{e != 0} A_e a^e / e + A_0 (Gamma'(1) - log a)

up to the fit error on ``(0, a)``.  ``A_0 Gamma'(1)`` and ``2 A_{-1/2}`` (the
``e = -1/2`` term at ``a = 1``) are the familiar finite-part constants.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DEFAULT_EXPONENTS",
    "DEFAULT_WINDOW",
    "DEFAULT_SPLIT",
    "AsymptoticFit",
    "FitError",
    "fit_asymptotics",
    "log_gauss_nodes",
    "RegularizedIntegral",
    "regularized_time_integral",
    "finite_part_decomposition",
]

EULER_GAMMA = float(np.euler_gamma)
DEFAULT_EXPONENTS = tuple(np.arange(-2, 7) / 2)  # -1, -1/2, ..., 3
# truncation after t^3 biases the fit above ~3e-3; see docs/conventions.md
DEFAULT_WINDOW = (3e-5, 3e-3)
DEFAULT_SPLIT = 3e-4


class FitError(ValueError):
    """Ill-conditioned design matrix or residual above tolerance."""


@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares model ``sum_e A_e t^e`` fitted on a small-time window.

    ``coeffs[j]`` is the coefficient array of ``t^exponents[j]``.  ``residual``
    is the largest absolute residual divided by the largest sample magnitude.
    """

    exponents: np.ndarray
    coeffs: np.ndarray
    residual: float
    window: tuple[float, float]
    t: np.ndarray = field(repr=False)
    condition: float = float("nan")

    def coefficient(self, e):
        idx = np.flatnonzero(np.isclose(self.exponents, e))
        if idx.size == 0:
            return np.zeros(self.coeffs.shape[1:], self.coeffs.dtype)
        return self.coeffs[idx[0]]

    def evaluate(self, t):
        t = np.asarray(t, float)
        basis = t[..., None] ** self.exponents
        return np.tensordot(basis, self.coeffs, axes=(-1, 0))

    def singular_norm(self, below: float = -0.5) -> float:
        """Largest ``|A_e|`` over exponents ``e <= below``."""
        sel = self.exponents <= below + 1e-12
        if not sel.any():
            return 0.0
        return float(np.abs(self.coeffs[sel]).max(initial=0.0))

    def to_dict(self):
        c = self.coeffs.reshape(len(self.exponents), -1)
        return {
            "exponents": [float(e) for e in self.exponents],
            "coeffs": [[[float(z.real), float(z.imag)] for z in row] for row in c],
            "residual": self.residual,
            "window": list(self.window),
            "condition": self.condition,
        }


def fit_asymptotics(t, values, exponents=DEFAULT_EXPONENTS, max_condition: float = 1e13):
    """Fit ``values[k] ~ sum_e A_e t[k]^e`` componentwise by least squares.

    ``values`` has shape ``(len(t), ...)``.  Columns are scaled to unit norm
    before solving; the scaled condition number must stay below
    ``max_condition``.
    """
    t = np.asarray(t, float)
    exps = np.asarray(exponents, float)
    if t.ndim != 1 or np.any(t <= 0):
        raise FitError("sample times must be a positive 1-D array")
    if t.size < 2 * exps.size:
        raise FitError(f"need at least {2 * exps.size} samples for {exps.size} exponents")
    vals = np.asarray(values)
    flat = vals.reshape(t.size, -1)
    A = t[:, None] ** exps
    scale = np.linalg.norm(A, axis=0)
    As = A / scale
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > max_condition:
        raise FitError(f"design matrix ill-conditioned (cond={cond:.3g}); shrink the exponent set")
    sol, *_ = np.linalg.lstsq(As, flat, rcond=None)
    sol = sol / scale[:, None]
    resid = np.abs(A @ sol - flat).max(initial=0.0)
    ref = max(np.abs(flat).max(initial=0.0), np.finfo(float).tiny)
    return AsymptoticFit(
        exponents=exps,
        coeffs=sol.reshape((exps.size,) + vals.shape[1:]),
        residual=float(resid / ref),
        window=(float(t.min()), float(t.max())),
        t=t,
        condition=cond,
    )


def log_gauss_nodes(a: float, b: float, panel_width: float = 0.5, order: int = 20):
    """Composite Gauss-Legendre rule for ``int_a^b f(t) dt/t`` in ``log t``.

    Returns ``(t, w)`` with ``int_a^b f dt/t ~= sum w f(t)``.
    """
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    la, lb = np.log(a), np.log(b)
    panels = max(1, int(np.ceil((lb - la) / panel_width)))
    edges = np.linspace(la, lb, panels + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return np.exp(s), ws


@dataclass
class RegularizedIntegral:
    """Value of ``zeta'(0)`` plus integration diagnostics."""

    value: np.ndarray
    fit: AsymptoticFit
    split: float
    t_max: float
    tail_bound: float
    n_nodes: int
    integral: np.ndarray  # -int_split^t_max F dt/t
    constants: np.ndarray  # model-term contribution

    def diagnostics(self):
        return {
            "split": self.split,
            "t_max": self.t_max,
            "tail_bound": self.tail_bound,
            "n_nodes": self.n_nodes,
            "fit": self.fit.to_dict(),
        }


def _model_constants(fit: AsymptoticFit, a: float):
    out = np.zeros(fit.coeffs.shape[1:], dtype=complex)
    for e, c in zip(fit.exponents, fit.coeffs):
        if abs(e) < 1e-12:
            out = out + c * (-EULER_GAMMA - np.log(a))
        else:
            out = out - c * a**e / e
    return out


def regularized_time_integral(
    fn,
    *,
    t_max: float,
    split: float = DEFAULT_SPLIT,
    window: tuple[float, float] = DEFAULT_WINDOW,
    exponents=DEFAULT_EXPONENTS,
    n_fit: int = 40,
    fit: AsymptoticFit | None = None,
    panel_width: float = 0.5,
    order: int = 20,
    max_fit_residual: float | None = None,
    tail_rate: float | None = None,
):
    """``zeta'(0)`` of ``s -> -Gamma(s)^{-1} int_0^inf t^{s-1} F(t) dt``.

    ``fn`` maps a 1-D array of times to values of shape ``(len(t), ...)``.
    The model coefficients come from ``fit`` when given, otherwise from a fit
    on ``n_fit`` log-spaced samples in ``window``.  ``tail_rate`` (an
    exponential decay rate) turns the value at ``t_max`` into a tail bound.
    """
    if not window[0] <= split <= window[1]:
        raise ValueError("split point must lie inside the fit window")
    if t_max <= split:
        raise ValueError("t_max must exceed the split point")
    if fit is None:
        ts = np.geomspace(window[0], window[1], n_fit)
        fit = fit_asymptotics(ts, fn(ts), exponents)
    if max_fit_residual is not None and fit.residual > max_fit_residual:
        raise FitError(f"fit residual {fit.residual:.3g} above {max_fit_residual:.3g}")
    t, w = log_gauss_nodes(split, t_max, panel_width, order)
    vals = np.asarray(fn(t))
    integral = -np.tensordot(w, vals, axes=(0, 0))
    consts = _model_constants(fit, split)
    end = np.abs(np.asarray(fn(np.array([t_max])))).max(initial=0.0)
    if tail_rate:
        tail = float(end / (tail_rate * t_max))
    else:
        tail = float(end)
    return RegularizedIntegral(
        value=integral + consts,
        fit=fit,
        split=split,
        t_max=t_max,
        tail_bound=tail,
        n_nodes=int(t.size),
        integral=integral,
        constants=consts,
    )


def finite_part_decomposition(fn, *, t_max: float, exponents, a: float = 1.0, **kw):
    """Split ``zeta'(0)`` into the finite-part integral and explicit constants at ``a``.

    Returns a dict with

    ``finite_part``  ``-int_0^a (F - sum_{e<=0} A_e t^e) dt/t - int_a^inf F dt/t``
    ``gamma_term``   ``A_0 Gamma'(1)``
    ``pole_terms``   ``-sum_{e<0} A_e a^e / e`` (``2 A_{-1/2}`` at ``a = 1``)
    ``log_term``     ``-A_0 log a``
    ``total``        the sum, equal to ``zeta'(0)``.

    ``exponents`` must list the non-positive exponents of the exact expansion.
    """
    reg = regularized_time_integral(fn, t_max=t_max, exponents=exponents, **kw)
    fit = reg.fit
    sing = fit.exponents <= 1e-12
    A0 = fit.coefficient(0.0)
    gamma_term = -EULER_GAMMA * A0
    log_term = -np.log(a) * A0
    pole = sum(
        (-c * a**e / e for e, c in zip(fit.exponents[sing], fit.coeffs[sing]) if abs(e) > 1e-12),
        np.zeros_like(A0),
    )
    total = reg.value
    return {
        "finite_part": total - gamma_term - log_term - pole,
        "gamma_term": gamma_term,
        "pole_terms": pole,
        "log_term": log_term,
        "total": total,
    }
