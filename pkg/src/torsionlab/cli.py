"""Command line: ``torsionlab validate|identities|torsion|adiabatic``.

Exit codes are shared by all commands:

0  success
1  I/O or configuration error (unreadable file, malformed JSON, schema violation)
2  a check failed (validation, identity tolerance, acyclicity, experiment flags)
3  the requested discretization exceeds the dimension cap

``TORSIONLAB_THREADS`` caps BLAS threads; it is applied before numpy loads.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

EXIT_OK, EXIT_IO, EXIT_CHECK, EXIT_CAP = 0, 1, 2, 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")

log = logging.getLogger("torsionlab")


class ConfigError(Exception):
    pass


def _apply_thread_cap():
    n = os.environ.get("TORSIONLAB_THREADS")
    if not n:
        return None
    if not n.isdigit() or int(n) < 1:
        raise ConfigError(f"TORSIONLAB_THREADS must be a positive integer, got {n!r}")
    for var in _THREAD_VARS:
        os.environ[var] = n
    return int(n)


def config_schema() -> dict:
    text = resources.files("torsionlab").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


def load_config(path) -> dict:
    """Read and schema-check a run configuration (``None`` gives defaults)."""
    import jsonschema

    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, config_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {path} invalid at {where}: {exc.message}") from exc
    return cfg


def _load_spec(path):
    from .flat_complex import SpecError, load_spec

    try:
        return load_spec(path)
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc}") from exc
    except (json.JSONDecodeError, SpecError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid spec {path}: {exc}") from exc


def _points(cfg, spec, seed, default):
    import numpy as np

    if "points" in cfg:
        pts = np.asarray(cfg["points"], float)
        if pts.ndim != 2 or pts.shape[1] != spec.p:
            raise ConfigError(f"points must be a list of {spec.p}-vectors")
        return pts
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, (cfg.get("n_points", default), spec.p)) * np.asarray(spec.periods)


def _cj(z):
    return [float(z.real), float(z.imag)]


def _clean(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if obj == obj and abs(obj) != float("inf") else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _write(out: Path, name: str, payload: dict):
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_validate(spec, cfg, out: Path, seed):
    from .flat_complex import acyclicity_check, validate_flatness

    rep = validate_flatness(spec, n=cfg.get("grid", 64), tol=cfg.get("tolerance", 1e-10))
    gap = acyclicity_check(spec, n=cfg.get("grid", 64)) if rep.positive else float("nan")
    acyclic = bool(gap > 0)
    payload = {"spec": spec.name, "validation": rep.to_dict(), "acyclicity_gap": gap,
               "acyclic": acyclic, "passed": bool(rep.passed and acyclic)}
    _write(out, "validate.json", payload)
    if not payload["passed"]:
        log.error("validation failed: %s", json.dumps(rep.to_dict()))
        return EXIT_CHECK
    return EXIT_OK


def cmd_identities(spec, cfg, out: Path, seed):
    from .superconnection import check_identities
    from .torsion import check_dmz6

    tol = cfg.get("tolerance", 1e-8)
    n = cfg.get("derivative_grid", 48)
    pts = _points(cfg, spec, seed, 10)
    rows, worst = [], 0.0
    for x in pts:
        for u in cfg.get("u", [0.25, 1.0, 4.0, 16.0]):
            for r in cfg.get("r", [0.0, 0.5, 1.0]):
                res = check_identities(spec, x, u, r, n=n)
                worst = max(worst, max(res.values()))
                rows.append({"x": x.tolist(), "u": u, "r": r, "residuals": res})
    d6 = cfg.get("dmz6", {})
    d6_tol = d6.get("tolerance", 1e-6)
    d6_rows, d6_worst = [], 0.0
    for x in pts:
        for t in d6.get("t", [0.5, 1.0, 2.0]):
            for r in d6.get("r", [0.0, 1.0]):
                resid, scale = check_dmz6(spec, x, t, r, n=n)
                d6_worst = max(d6_worst, resid)
                d6_rows.append({"x": x.tolist(), "t": t, "r": r, "residual": resid, "lhs_norm": scale})
    passed = worst <= tol and d6_worst <= d6_tol
    _write(out, "identities.json", {
        "spec": spec.name, "tolerance": tol, "worst": worst, "rows": rows,
        "dmz6": {"tolerance": d6_tol, "worst": d6_worst, "rows": d6_rows}, "passed": passed,
    })
    if not passed:
        log.error("identity residual %.3g (tol %.3g), dmz6 %.3g (tol %.3g)", worst, tol, d6_worst, d6_tol)
        return EXIT_CHECK
    return EXIT_OK


def _torsion_opts(cfg):
    from .torsion import TorsionOptions

    t = cfg.get("torsion", {})
    kw = {}
    if "split" in t:
        kw["split"] = t["split"]
    if "window" in t:
        kw["window"] = tuple(t["window"])
    if "n_fit" in t:
        kw["n_fit"] = t["n_fit"]
    return TorsionOptions(**kw), t


def cmd_torsion(spec, cfg, out: Path, seed):
    from .flat_complex import acyclicity_check
    from .torsion import check_dmz7, integrate_T_field, torsion_report

    if acyclicity_check(spec, n=cfg.get("grid", 32)) <= 0:
        log.error("spec %s is not acyclic", spec.name)
        return EXIT_CHECK
    opts, tcfg = _torsion_opts(cfg)
    pts = _points(cfg, spec, seed, 4)
    reports = []
    for r in cfg.get("r", [0.0]):
        rep = torsion_report(spec, pts, r, opts)
        entry = {"r": r, "pointwise": rep.to_dict()}
        if tcfg.get("dmz7", False):
            block = []
            for i in range(2, spec.p + 1, 2):
                res = check_dmz7(spec, r, i, x=pts, opts=opts)
                block.append({"degree": i, "factor": res.factor, "error": res.error,
                              "vacuous": res.vacuous,
                              "ratio": [_cj(z) for z in res.ratio.ravel()]})
            entry["dmz7"] = block
        grid = tcfg.get("base_grid", 0)
        if grid:
            entry["integral_top"] = {
                "T": _cj(integrate_T_field(spec, r, n=grid, opts=opts)),
                "T_tilde": _cj(integrate_T_field(spec, r, n=grid, opts=opts, which="T_tilde")),
                "grid": grid,
            }
        reports.append(entry)
    _write(out, "torsion.json", {"spec": spec.name, "reports": reports})
    return EXIT_OK


def cmd_adiabatic(spec, cfg, out: Path, seed):
    import numpy as np

    from .adiabatic import DimensionCapError, ExperimentConfig, run_experiment

    a = cfg.get("adiabatic", {})
    kw = {k: a[k] for k in ("r", "n", "n_refine", "max_dim", "rhs_grid", "tolerance",
                           "estimator", "l_normalization", "u_ref", "split", "check_spectrum") if k in a}
    if "u_schedule" in a:
        kw["u_schedule"] = tuple(a["u_schedule"])
    opts, _ = _torsion_opts(cfg)
    ecfg = ExperimentConfig(torsion_opts=opts, **kw)
    times = np.asarray(a["trace_times"], float) if "trace_times" in a else None
    try:
        rep = run_experiment(spec, ecfg, trace_times=times)
    except DimensionCapError as exc:
        log.error("%s", exc)
        _write(out, "adiabatic.json", {"spec": spec.name, "error": str(exc),
                                       "suggested_n": exc.suggestion})
        return EXIT_CAP
    payload = rep.to_dict()
    traces = payload["diagnostics"].pop("traces")
    if traces:
        tdir = out / "traces"
        tdir.mkdir(parents=True, exist_ok=True)
        for key, (t, h) in traces.items():
            rows = "\n".join(f"{ti!r},{hi.real!r},{hi.imag!r}" for ti, hi in zip(t, h))
            (tdir / f"{key}.csv").write_text("t,Re,Im\n" + rows + "\n")
    _write(out, "adiabatic.json", payload)
    if rep.flags:
        log.error("experiment flags: %s", "; ".join(rep.flags))
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "identities": cmd_identities,
    "torsion": cmd_torsion,
    "adiabatic": cmd_adiabatic,
}


def build_parser():
    p = argparse.ArgumentParser(prog="torsionlab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--spec", required=True, help="complex-spec JSON file")
    p.add_argument("--config", help="run configuration JSON (schema: torsionlab/schemas)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized sample points")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_thread_cap()
        cfg = load_config(args.config)
        spec = _load_spec(args.spec)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_IO
    from .adiabatic import DimensionCapError

    out = Path(args.out)
    try:
        return COMMANDS[args.command](spec, cfg, out, args.seed)
    except DimensionCapError as exc:
        log.error("%s", exc)
        return EXIT_CAP
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
