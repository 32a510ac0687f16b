"""Parameter sweeps, peak searches and cross-backend verification."""
from __future__ import annotations

import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .analytics import (correlation_set, detuned_amplitudes, entanglement_report,
                        solve_weak_drive, schwarz_test)
from .exceptions import DegenerateCorrelation, NotFound, NotUnimodal
from .master import coherence_amplitudes, normalized_correlations, observables, solve
from .model import SystemParams

SCHEMA_VERSION = 1
PARAMETERS = ("g", "kappa", "gamma", "epsilon", "delta")
BACKENDS = ("analytic", "master_equation", "both")
CORRELATION_QUANTITIES = ("g1_tf", "g2_tf", "h_tf", "g2_tt", "g2_ff",
                          "schwarz_lhs", "schwarz_rhs", "schwarz_violated")
QUANTITIES = ("concurrence", "concurrence_scaled", "entropy", "lambda1", "xi", "q", "p",
              "alpha_abs", "beta_abs") + CORRELATION_QUANTITIES


@dataclass(frozen=True)
class SweepAxis:
    name: str
    min: float
    max: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.name!r}")
        if self.count < 2:
            raise ValueError("axis count must be >= 2")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"scale must be linear or log, got {self.scale!r}")
        if self.scale == "log" and (self.min <= 0 or self.max <= 0):
            raise ValueError("log axes need a positive range")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple
    fixed: dict = field(default_factory=dict)
    quantities: tuple = ("concurrence",)
    backend: str = "analytic"
    n_max: int = 4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "quantities", tuple(self.quantities))
        names = [a.name for a in self.axes]
        if not names or len(set(names)) != len(names):
            raise ValueError("need at least one axis and no duplicate axis names")
        unknown = set(self.fixed) - set(PARAMETERS)
        if unknown:
            raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
        bad = [q for q in self.quantities if q not in QUANTITIES]
        if bad or not self.quantities:
            raise ValueError(f"unknown quantities {bad}; choose from {QUANTITIES}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")

    def points(self):
        base = {"g": 1.0, "kappa": 1.0, "gamma": 1.0, "epsilon": 1e-3, "delta": 0.0}
        base.update(self.fixed)
        grids = [a.values() for a in self.axes]
        for combo in itertools.product(*grids):
            vals = dict(base)
            vals.update(zip((a.name for a in self.axes), combo))
            yield combo, vals


@dataclass
class SweepResult:
    axis_names: list
    columns: list
    coords: list
    rows: list
    status: list
    metadata: dict

    def __len__(self):
        return len(self.rows)

    def column(self, name) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([np.nan if r[k] is None else float(r[k]) for r in self.rows])

    def grid(self, name) -> np.ndarray:
        """Column reshaped to the sweep grid (row-major over declared axes)."""
        shape = [a["count"] for a in self.metadata["axes"]]
        return self.column(name).reshape(shape)

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        buf.write(",".join(self.axis_names + self.columns + ["status"]) + "\n")
        for coord, row, st in zip(self.coords, self.rows, self.status):
            cells = [_fmt(c) for c in coord] + [_fmt(v) for v in row] + [st]
            buf.write(",".join(cells) + "\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def to_jsonl(self, fh=None) -> str:
        lines = [json.dumps({"metadata": self.metadata}, sort_keys=True)]
        for coord, row, st in zip(self.coords, self.rows, self.status):
            rec = dict(zip(self.axis_names, map(float, coord)))
            rec.update({c: _json_value(v) for c, v in zip(self.columns, row)})
            rec["status"] = st
            lines.append(json.dumps(rec, sort_keys=True))
        text = "\n".join(lines) + "\n"
        if fh is not None:
            fh.write(text)
        return text


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return repr(float(v))


def _json_value(v):
    if v is None or isinstance(v, (bool, np.bool_)):
        return None if v is None else bool(v)
    return float(v)


def _analytic_values(params: SystemParams, quantities):
    amps = detuned_amplitudes(params)
    rep = entanglement_report(amps)
    out = {
        "concurrence": rep.concurrence,
        "entropy": rep.entropy,
        "lambda1": rep.lambda1,
        "xi": amps.xi,
        "q": amps.q.real,
        "p": amps.p.real,
        "alpha_abs": abs(amps.a1g),
        "beta_abs": abs(amps.a0e),
    }
    if "concurrence_scaled" in quantities:
        unit = params if params.epsilon > 0 else params.replace(epsilon=1.0)
        c = entanglement_report(detuned_amplitudes(unit)).concurrence
        out["concurrence_scaled"] = c / unit.epsilon**2
    status = "ok"
    if any(q in CORRELATION_QUANTITIES for q in quantities):
        try:
            out.update(asdict(correlation_set(amps)))
        except DegenerateCorrelation:
            status = "degenerate"
    return out, status


def _master_values(params: SystemParams, quantities, n_max):
    rho = solve(params, n_max)
    obs = observables(rho)
    amps = coherence_amplitudes(rho, params)
    rep = entanglement_report(amps)
    out = {
        "concurrence": rep.concurrence,
        "concurrence_scaled": rep.concurrence / params.epsilon**2 if params.epsilon > 0 else None,
        "entropy": rep.entropy,
        "lambda1": rep.lambda1,
        "xi": amps.xi,
        "q": amps.q.real,
        "p": amps.p.real,
        "alpha_abs": abs(obs.mean_field),
        "beta_abs": np.sqrt(obs.excited_pop),
    }
    status = "ok"
    if any(q in CORRELATION_QUANTITIES for q in quantities):
        try:
            out.update(asdict(normalized_correlations(obs)))
        except DegenerateCorrelation:
            status = "degenerate"
    return out, status


def evaluate(params: SystemParams, quantities, backend: str = "analytic", n_max: int = 4):
    """Values of the requested quantities at one point, plus a status string.

    Values that cannot be computed (degenerate correlations) come back as
    ``None`` with status ``"degenerate"``.
    """
    backends = ["analytic", "master_equation"] if backend == "both" else [backend]
    values, status = {}, "ok"
    for b in backends:
        if b == "analytic":
            out, st = _analytic_values(params, quantities)
        else:
            out, st = _master_values(params, quantities, n_max)
        if st != "ok":
            status = st
        suffix = "" if backend != "both" else ("_analytic" if b == "analytic" else "_me")
        for q in quantities:
            values[q + suffix] = out.get(q)
    return values, status


def _evaluate_star(args):
    return evaluate(*args)


def _column_names(spec):
    if spec.backend != "both":
        return list(spec.quantities)
    return [q + s for s in ("_analytic", "_me") for q in spec.quantities]


def run_sweep(spec: SweepSpec, *, workers: int = 1) -> SweepResult:
    """Evaluate every grid point, row-major over the declared axes.

    Output order never depends on ``workers``.
    """
    points = list(spec.points())
    jobs = [(SystemParams(**vals), spec.quantities, spec.backend, spec.n_max) for _, vals in points]
    if spec.backend == "analytic" and workers <= 1:
        results = _analytic_batch(jobs, spec.quantities)
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_evaluate_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [evaluate(*j) for j in jobs]
    columns = _column_names(spec)
    rows, status = [], []
    for values, st in results:
        rows.append([values.get(c) for c in columns])
        status.append(st)
    metadata = {
        "schema_version": SCHEMA_VERSION,
        "version": f"cqed_entanglement {__version__}",
        "axes": [asdict(a) for a in spec.axes],
        "fixed": dict(sorted(spec.fixed.items())),
        "quantities": list(spec.quantities),
        "backend": spec.backend,
        "n_max": spec.n_max,
        "seed": spec.seed,
    }
    return SweepResult([a.name for a in spec.axes], columns, [c for c, _ in points], rows, status, metadata)


def _analytic_batch(jobs, quantities):
    # Vectorized fast path for concurrence-type quantities; falls back per point otherwise.
    simple = {"concurrence", "concurrence_scaled", "alpha_abs", "beta_abs"}
    if not set(quantities) <= simple:
        return [evaluate(*j) for j in jobs]
    arr = {k: np.array([getattr(j[0], k) for j in jobs]) for k in PARAMETERS}
    a1g, a0e, _, a1e = solve_weak_drive(arr["g"], arr["kappa"], arr["gamma"], arr["epsilon"], arr["delta"])
    u1g, u0e, _, u1e = solve_weak_drive(arr["g"], arr["kappa"], arr["gamma"], 1.0, arr["delta"])
    cols = {
        "concurrence": 2 * np.abs(a1g * a0e - a1e),
        "concurrence_scaled": 2 * np.abs(u1g * u0e - u1e),
        "alpha_abs": np.abs(a1g),
        "beta_abs": np.abs(a0e),
    }
    return [({q: float(cols[q][i]) for q in quantities}, "ok") for i in range(len(jobs))]


@dataclass(frozen=True)
class Peak:
    argmax: float
    max_value: float


def _quantity_along(quantity, fixed: SystemParams, axis: str, backend="analytic", n_max=4):
    def f(x):
        values, status = evaluate(fixed.replace(**{axis: float(x)}), (quantity,), backend, n_max)
        v = values[quantity]
        if v is None:
            raise DegenerateCorrelation(f"{quantity} undefined at {axis}={x}")
        return float(v)
    return f


def find_peak(quantity: str, fixed: SystemParams, axis: str, lo: float, hi: float, *,
              n_coarse: int = 201, scale: str = "log", rel_tol: float = 1e-9,
              backend: str = "analytic") -> Peak:
    """Locate the maximum of ``quantity`` along one parameter axis.

    A coarse scan checks that there is a single interior maximum, then
    golden-section search refines it to well below 1e-4 in axis units.
    """
    f = _quantity_along(quantity, fixed, axis, backend)
    xs = SweepAxis(axis, lo, hi, n_coarse, scale).values()
    ys = np.array([f(x) for x in xs])
    top = ys.max()
    interior = [i for i in range(1, len(ys) - 1)
                if ys[i] >= ys[i - 1] and ys[i] >= ys[i + 1] and ys[i] > rel_tol * top]
    significant = [i for i in interior if ys[i] - min(ys[i - 1], ys[i + 1]) > rel_tol * abs(top)]
    if len(significant) != 1:
        raise NotUnimodal(f"{len(significant)} local maxima of {quantity} along {axis} in [{lo}, {hi}]")
    i = significant[0]
    if ys[i] < top:
        raise NotUnimodal(f"maximum of {quantity} sits on the scan boundary")
    res = minimize_scalar(lambda x: -f(x), bracket=(xs[i - 1], xs[i], xs[i + 1]),
                          method="golden", tol=1e-10)
    return Peak(float(res.x), float(-res.fun))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float


def fit_detuning_slope(params: SystemParams, delta_range=(30.0, 300.0), n_points: int = 41,
                       quantity: str = "concurrence") -> SlopeFit:
    """Least-squares slope of log(quantity) against log(delta).

    ``residual`` is the RMS deviation from the fitted line in natural-log
    units.
    """
    lo, hi = delta_range
    scale = max(params.g, params.kappa, params.gamma)
    if lo < 10 * scale:
        raise ValueError(f"delta range must start at >= 10 * max(g, kappa, gamma) = {10 * scale}")
    deltas = np.geomspace(lo, hi, n_points)
    f = _quantity_along(quantity, params if params.epsilon > 0 else params.replace(epsilon=1.0),
                        "delta")
    ys = np.log([f(d) for d in deltas])
    xs = np.log(deltas)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    return SlopeFit(float(slope), float(intercept), resid)


@dataclass(frozen=True)
class SchwarzHit:
    params: SystemParams
    concurrence_scaled: float
    lhs: float
    rhs: float
    violated: bool


def find_schwarz_counterexample(g_range=(0.0, 5.0), kappa_range=(0.0, 10.0), *, gamma: float = 1.0,
                                n: int = 200, min_concurrence: float = 1e-8) -> SchwarzHit:
    """First resonant point (g ascending, then kappa) that is entangled but obeys the Schwarz bound.

    The open lower ends of the ranges are excluded; grids are uniform
    with ``n`` points on each half-open interval.
    """
    gs = np.linspace(*g_range, n + 1)[1:]
    ks = np.linspace(*kappa_range, n + 1)[1:]
    for g in gs:
        for k in ks:
            p = SystemParams(float(g), float(k), gamma, 1.0)
            amps = detuned_amplitudes(p)
            c = entanglement_report(amps).concurrence
            if c <= min_concurrence:
                continue
            corr = correlation_set(amps)
            s = schwarz_test(corr.g2_tf, corr.g2_tt, corr.g2_ff)
            if not s.violated:
                return SchwarzHit(p.replace(epsilon=0.0), c, s.lhs, s.rhs, False)
    raise NotFound("no entangled point satisfying the Schwarz inequality in the region")


# -- verification ---------------------------------------------------------

VERIFY_QUANTITIES = ("alpha_abs", "beta_abs", "g1_tf", "g2_tf", "h_tf", "g2_tt", "concurrence")


def me_tolerance(epsilon: float) -> float:
    """Allowed relative analytic/master-equation gap: 1e-3 at eps=1e-3, growing as eps^2."""
    return max(1e-3, 1e3 * epsilon**2)


@dataclass
class VerificationRow:
    """``value`` from ``backend`` against ``reference``.

    Master-equation rows use the weak-drive formula as reference;
    trajectory rows use the master equation at the same drive and pass
    within three bootstrap standard errors.
    """

    quantity: str
    epsilon: float
    backend: str
    value: float
    reference: float
    rel_error: float
    tolerance: float
    stderr: float = float("nan")

    @property
    def passed(self) -> bool:
        if self.backend == "trajectory":
            return abs(self.value - self.reference) <= 3 * self.stderr
        return self.rel_error <= self.tolerance


@dataclass
class VerificationReport:
    params: SystemParams
    rows: list
    slopes: dict
    slope_target: float = 2.0
    slope_tol: float = 0.1
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        rows_ok = all(r.passed for r in self.rows)
        slopes_ok = all(abs(s - self.slope_target) <= self.slope_tol for s in self.slopes.values())
        return rows_ok and slopes_ok and all(self.checks.values())

    def failures(self) -> list:
        out = [f"{r.backend}:{r.quantity}@eps={r.epsilon:g}" for r in self.rows if not r.passed]
        out += [f"slope:{k}={v:.3f}" for k, v in self.slopes.items()
                if abs(v - self.slope_target) > self.slope_tol]
        out += [k for k, ok in self.checks.items() if not ok]
        return out

    def to_text(self) -> str:
        p = self.params
        lines = [f"# params g={p.g!r} kappa={p.kappa!r} gamma={p.gamma!r} delta={p.delta!r}",
                 f"{'backend':<16}{'quantity':<14}{'epsilon':>12}{'value':>16}{'reference':>16}"
                 f"{'rel_error':>12}{'tolerance':>12}{'stderr':>12}  result"]
        for r in self.rows:
            lines.append(f"{r.backend:<16}{r.quantity:<14}{r.epsilon:>12.4e}{r.value:>16.9e}"
                         f"{r.reference:>16.9e}{r.rel_error:>12.3e}{r.tolerance:>12.3e}"
                         f"{r.stderr:>12.3e}  {'PASS' if r.passed else 'FAIL'}")
        for k, v in sorted(self.slopes.items()):
            ok = abs(v - self.slope_target) <= self.slope_tol
            lines.append(f"slope {k:<14} {v:8.4f} (target {self.slope_target} +- {self.slope_tol})"
                         f"  {'PASS' if ok else 'FAIL'}")
        for k, ok in sorted(self.checks.items()):
            lines.append(f"check {k:<30} {'PASS' if ok else 'FAIL'}")
        lines.append(f"overall {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _analytic_reference(params):
    amps = detuned_amplitudes(params)
    corr = correlation_set(amps)
    return {
        "alpha_abs": abs(amps.a1g), "beta_abs": abs(amps.a0e),
        "g1_tf": corr.g1_tf, "g2_tf": corr.g2_tf, "h_tf": corr.h_tf, "g2_tt": corr.g2_tt,
        "concurrence": entanglement_report(amps).concurrence,
    }


def _me_values(params, n_max, convention):
    rho = solve(params, n_max, jump_convention=convention)
    obs = observables(rho)
    corr = normalized_correlations(obs)
    amps = coherence_amplitudes(rho, params)
    return {
        "alpha_abs": abs(obs.mean_field), "beta_abs": float(np.sqrt(obs.excited_pop)),
        "g1_tf": corr.g1_tf, "g2_tf": corr.g2_tf, "h_tf": corr.h_tf, "g2_tt": corr.g2_tt,
        "concurrence": entanglement_report(amps).concurrence,
    }


def verify_pipeline(params: SystemParams, epsilons=(1e-2, 3e-3, 1e-3), trajectory_config=None, *,
                    n_max: int = 4, jump_convention: str = "consistent",
                    trajectory_epsilon: float | None = None, n_workers: int = 1) -> VerificationReport:
    """Analytic vs master equation (vs trajectories) at one operating point.

    The master-equation gap must fall within :func:`me_tolerance` at every
    epsilon and shrink as epsilon^2. When ``trajectory_config`` is given,
    the g2 and h estimators are run at ``trajectory_epsilon`` (default
    0.05 kappa) and compared with the master equation at the same drive.
    ``jump_convention`` is a test hook for the dissipator normalization.
    """
    rows, errors = [], {q: [] for q in VERIFY_QUANTITIES}
    eps_sorted = sorted(epsilons, reverse=True)
    for eps in eps_sorted:
        p = params.replace(epsilon=eps)
        ref = _analytic_reference(p)
        me = _me_values(p, n_max, jump_convention)
        for q in VERIFY_QUANTITIES:
            err = abs(me[q] - ref[q]) / abs(ref[q])
            errors[q].append(err)
            rows.append(VerificationRow(q, eps, "master_equation", me[q], ref[q], err, me_tolerance(eps)))
    slopes = {}
    if len(eps_sorted) >= 2:
        x = np.log(eps_sorted)
        for q, errs in errors.items():
            if min(errs) > 1e-13:
                slopes[q] = float(np.polyfit(x, np.log(errs), 1)[0])
    checks = {}
    if trajectory_config is not None:
        from .trajectories import estimate_g2_tf, estimate_h_tf, run_ensemble
        from .model import HilbertSpace
        eps_t = trajectory_epsilon if trajectory_epsilon is not None else 0.05 * params.kappa
        p = params.replace(epsilon=eps_t)
        me = _me_values(p, n_max, jump_convention)
        ens = run_ensemble(p, HilbertSpace(n_max), trajectory_config, n_workers=n_workers,
                           convention=jump_convention)
        for q, est in (("g2_tf", estimate_g2_tf(ens)), ("h_tf", estimate_h_tf(ens))):
            rows.append(VerificationRow(q, eps_t, "trajectory", est.value, me[q],
                                        abs(est.value - me[q]) / abs(me[q]), float("nan"), est.stderr))
        checks["side_click_leaves_ground_state"] = ens.max_side_excited == 0.0
    return VerificationReport(params, rows, slopes, checks=checks)
