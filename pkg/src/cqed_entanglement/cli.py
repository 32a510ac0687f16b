"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 verification failure,
4 insufficient statistics.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .analytics import (concurrence_closed_form, correlation_set, detuned_amplitudes,
                        entanglement_report, witness_identity_check)
from .exceptions import DegenerateCorrelation, InsufficientStatistics, NotFound, StepTooLarge
from .master import normalized_correlations, observables, solve
from .model import HilbertSpace, SystemParams
from .sweep import (QUANTITIES, SweepAxis, SweepSpec, find_schwarz_counterexample, run_sweep,
                    verify_pipeline)
from .trajectories import (TrajectoryConfig, estimate_g2_tf, estimate_h_tf, run_ensemble,
                           write_clicks_csv)

EXIT_OK, EXIT_VALIDATION, EXIT_VERIFY, EXIT_STATS = 0, 2, 3, 4

DEFAULTS = {
    "g": 1.0, "kappa": 0.5, "gamma": 1.0, "epsilon": 1e-3, "delta": 0.0,
    "units": "gamma", "nmax": 4, "backend": "analytic", "seed": 0, "out": None, "format": "csv",
    # sweep
    "axis": None, "quantity": None, "workers": 1,
    # trajectories / verify
    "dt": 0.05, "t_total": 2000.0, "trajectories": 100, "burn_in": None, "window": 0.0,
    "clicks_out": None, "min_clicks": 1000, "eps_list": "1e-2,3e-3,1e-3", "with_trajectories": False,
    "traj_epsilon": None,
    # schwarz-scan
    "g_max": 5.0, "kappa_max": 10.0, "n": 200,
}


class ValidationError(Exception):
    pass


def _common(p):
    p.add_argument("--config", help="JSON file of flat key-value settings; flags override it")
    p.add_argument("--g", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--units", choices=("gamma", "absolute"),
                   help="rates in units of gamma (default) or absolute, rescaled internally")
    p.add_argument("--nmax", type=int)
    p.add_argument("--backend", choices=("analytic", "master_equation", "both"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json-lines"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqed-entangle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("amplitudes", "weak-drive amplitudes and saturation parameters"),
                        ("measures", "concurrence, entropy and reduced-state eigenvalues"),
                        ("correlations", "zero-delay correlations and the Schwarz test"),
                        ("mesolve", "master-equation steady state and its observables")):
        _common(sub.add_parser(name, help=help_))

    sp = sub.add_parser("sweep", help="grid sweep over one or more parameters")
    _common(sp)
    sp.add_argument("--axis", action="append",
                    help="NAME:MIN:MAX:COUNT[:log], repeatable; first axis varies slowest")
    sp.add_argument("--quantity", action="append", help=f"one of {', '.join(QUANTITIES)}; repeatable")
    sp.add_argument("--workers", type=int)

    for name in ("trajectories", "verify"):
        tp = sub.add_parser(name, help="quantum-trajectory witness estimates" if name == "trajectories"
                            else "analytic vs master equation (vs trajectories) report")
        _common(tp)
        tp.add_argument("--dt", type=float)
        tp.add_argument("--t-total", dest="t_total", type=float)
        tp.add_argument("--trajectories", type=int)
        tp.add_argument("--burn-in", dest="burn_in", type=float)
        tp.add_argument("--workers", type=int)
        tp.add_argument("--min-clicks", dest="min_clicks", type=int)
        if name == "trajectories":
            tp.add_argument("--window", type=float)
            tp.add_argument("--clicks-out", dest="clicks_out", help="write click records as CSV")
        else:
            tp.add_argument("--eps-list", dest="eps_list", help="comma-separated drive strengths")
            tp.add_argument("--with-trajectories", dest="with_trajectories", action="store_true",
                            default=None)
            tp.add_argument("--traj-epsilon", dest="traj_epsilon", type=float)

    sc = sub.add_parser("schwarz-scan", help="find an entangled point obeying the Schwarz bound")
    _common(sc)
    sc.add_argument("--g-max", dest="g_max", type=float)
    sc.add_argument("--kappa-max", dest="kappa_max", type=float)
    sc.add_argument("--n", type=int)
    return parser


def resolve_settings(args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    settings = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a flat key-value object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - set(DEFAULTS))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        settings.update(cfg)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            settings[key] = value
    return settings


def params_from(settings) -> SystemParams:
    try:
        p = SystemParams(float(settings["g"]), float(settings["kappa"]), float(settings["gamma"]),
                         float(settings["epsilon"]), float(settings["delta"]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
    if settings["units"] == "absolute":
        p = p.in_units_of_gamma()
    return p


@contextlib.contextmanager
def _output(settings):
    if settings["out"]:
        with open(settings["out"], "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _clean(v):
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, SystemParams):
        return asdict(v)
    return v


def _flatten(record: dict) -> dict:
    flat = {}
    for k, v in record.items():
        v = _clean(v)
        if isinstance(v, dict):
            for kk, vv in v.items():
                flat[f"{k}_{kk}"] = vv
        else:
            flat[k] = v
    return flat


def write_records(records, settings, metadata=None):
    records = [_flatten(r) for r in records]
    with _output(settings) as fh:
        if settings["format"] == "json-lines":
            if metadata is not None:
                fh.write(json.dumps({"metadata": metadata}, sort_keys=True) + "\n")
            for r in records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
            return
        if metadata is not None:
            for k in sorted(metadata):
                fh.write(f"# {k}: {json.dumps(metadata[k], sort_keys=True)}\n")
        keys = list(records[0]) if records else []
        fh.write(",".join(keys) + "\n")
        for r in records:
            fh.write(",".join("" if r[k] is None else (str(r[k]).lower() if isinstance(r[k], bool)
                                                      else repr(r[k])) for k in keys) + "\n")


def _metadata(settings, params):
    return {"version": f"cqed_entanglement {__version__}", "params": asdict(params),
            "units": "gamma", "seed": settings["seed"]}


def cmd_amplitudes(settings):
    p = params_from(settings)
    amps = detuned_amplitudes(p)
    rec = {k: getattr(amps, k) for k in ("a1g", "a0e", "a2g", "a1e", "alpha", "beta", "p", "q",
                                         "c1", "c1p", "xi")}
    write_records([rec], settings, _metadata(settings, p))


def cmd_measures(settings):
    p = params_from(settings)
    rec = asdict(entanglement_report(detuned_amplitudes(p)))
    if p.delta == 0:
        rec["concurrence_closed_form"] = concurrence_closed_form(p)
        rec["concurrence_from_witness"] = witness_identity_check(p).c_from_witness
    write_records([rec], settings, _metadata(settings, p))


def cmd_correlations(settings):
    p = params_from(settings)
    if settings["backend"] == "analytic":
        rec = asdict(correlation_set(detuned_amplitudes(p)))
    else:
        rec = asdict(normalized_correlations(observables(solve(p, settings["nmax"]))))
    write_records([rec], settings, _metadata(settings, p))


def cmd_mesolve(settings):
    p = params_from(settings)
    rho = solve(p, settings["nmax"])
    obs = observables(rho)
    rec = asdict(obs)
    rec["field_intensity_cross"] = obs.field_intensity_cross
    rec["purity_defect"] = 1 - rho.purity
    try:
        rec.update({f"corr_{k}": v for k, v in asdict(normalized_correlations(obs)).items()})
    except DegenerateCorrelation:
        pass
    write_records([rec], settings, _metadata(settings, p))


def _parse_axis(text):
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ValidationError(f"bad axis {text!r}; expected NAME:MIN:MAX:COUNT[:log]")
    try:
        return SweepAxis(parts[0], float(parts[1]), float(parts[2]), int(parts[3]),
                         parts[4] if len(parts) == 5 else "linear")
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def cmd_sweep(settings):
    p = params_from(settings)
    axes = settings["axis"] or []
    if isinstance(axes, str):
        axes = [axes]
    if not axes:
        raise ValidationError("sweep needs at least one --axis")
    quantities = settings["quantity"] or ["concurrence"]
    if isinstance(quantities, str):
        quantities = quantities.split(",")
    quantities = [q for item in quantities for q in item.split(",")]
    parsed = [_parse_axis(a) for a in axes]
    fixed = {k: v for k, v in asdict(p).items() if k not in {a.name for a in parsed}}
    try:
        spec = SweepSpec(parsed, fixed, tuple(quantities), settings["backend"], settings["nmax"],
                         settings["seed"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    result = run_sweep(spec, workers=settings["workers"])
    with _output(settings) as fh:
        if settings["format"] == "json-lines":
            result.to_jsonl(fh)
        else:
            result.to_csv(fh)


def _traj_config(settings, p):
    burn = settings["burn_in"]
    if burn is None:
        burn = 10.0 / min(p.kappa, p.gamma / 2)
    return TrajectoryConfig(settings["dt"], settings["t_total"], settings["trajectories"],
                            settings["seed"], burn)


def cmd_trajectories(settings):
    p = params_from(settings)
    cfg = _traj_config(settings, p)
    ens = run_ensemble(p, HilbertSpace(settings["nmax"]), cfg, n_workers=settings["workers"])
    if settings["clicks_out"]:
        write_clicks_csv(ens, settings["clicks_out"])
    g2 = estimate_g2_tf(ens, settings["window"], min_clicks=settings["min_clicks"])
    h = estimate_h_tf(ens, min_clicks=settings["min_clicks"])
    rates = ens.click_rates()
    rec = {"g2_tf": g2.value, "g2_tf_stderr": g2.stderr, "h_tf": h.value, "h_tf_stderr": h.stderr,
           "side_clicks": ens.n_side_clicks, "mirror_rate": rates["mirror"], "side_rate": rates["side"],
           "max_excited_after_side_click": ens.max_side_excited}
    meta = _metadata(settings, p)
    meta["trajectory_config"] = asdict(cfg)
    write_records([rec], settings, meta)


def cmd_verify(settings):
    p = params_from(settings)
    try:
        eps = [float(x) for x in str(settings["eps_list"]).split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad --eps-list: {exc}") from exc
    cfg = _traj_config(settings, p) if settings["with_trajectories"] else None
    report = verify_pipeline(p, eps, cfg, n_max=settings["nmax"],
                             trajectory_epsilon=settings["traj_epsilon"], n_workers=settings["workers"])
    with _output(settings) as fh:
        fh.write(report.to_text())
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_schwarz_scan(settings):
    p = params_from(settings)
    try:
        hit = find_schwarz_counterexample((0.0, settings["g_max"]), (0.0, settings["kappa_max"]),
                                          gamma=p.gamma, n=settings["n"])
    except NotFound as exc:
        print(f"not found: {exc}", file=sys.stderr)
        write_records([{"found": False}], settings)
        return EXIT_OK
    rec = {"found": True, "g": hit.params.g, "kappa": hit.params.kappa, "gamma": hit.params.gamma,
           "concurrence_scaled": hit.concurrence_scaled, "schwarz_lhs": hit.lhs, "schwarz_rhs": hit.rhs}
    write_records([rec], settings)
    return EXIT_OK


COMMANDS = {
    "amplitudes": cmd_amplitudes, "measures": cmd_measures, "correlations": cmd_correlations,
    "mesolve": cmd_mesolve, "sweep": cmd_sweep, "trajectories": cmd_trajectories,
    "verify": cmd_verify, "schwarz-scan": cmd_schwarz_scan,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_settings(args)
        code = COMMANDS[args.command](settings)
    except (ValidationError, ValueError, DegenerateCorrelation, StepTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InsufficientStatistics as exc:
        print(f"insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_STATS
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
