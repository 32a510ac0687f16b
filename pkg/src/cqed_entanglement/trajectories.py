"""Quantum-jump unraveling with mirror and side detection channels.

Each trajectory evolves an unnormalized state under the no-jump
Hamiltonian until its squared norm falls to a uniform random threshold,
then collapses through the mirror (``sqrt(2 kappa) a``) or side
(``sqrt(gamma) s-``) channel with probability proportional to
``<C^dag C>``. Trajectories are stepped together on a fixed time grid
with the exact step propagator ``exp(-i H_eff dt)``; a threshold crossing
inside a step is located to machine precision by root finding on the
sub-step propagator, so click times are not quantized to the grid.

Every trajectory owns an RNG stream seeded by ``(seed, index)``, which
makes results independent of batching and worker count.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .exceptions import InsufficientStatistics, StepTooLarge
from .master import DensityOperator
from .model import (HilbertSpace, SystemParams, build_effective_hamiltonian,
                    build_operators, jump_operators, GROUND)

MIRROR, SIDE = 0, 1
CHANNEL_NAMES = ("mirror", "side")
MAX_STEP_RATE_PRODUCT = 0.05


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float = 0.05
    t_total: float = 1000.0
    n_trajectories: int = 100
    seed: int = 0
    burn_in: float = 40.0
    sample_every: int = 1

    def validate(self, params: SystemParams, *, steady: bool = True):
        """Raise if the step is too coarse or, for steady-state sampling, the burn-in too short."""
        if self.dt <= 0 or self.t_total <= 0 or self.n_trajectories < 1 or self.sample_every < 1:
            raise ValueError(f"invalid trajectory config {self}")
        fastest = max(params.kappa, params.gamma, params.g, abs(params.delta), params.epsilon)
        if self.dt * fastest > MAX_STEP_RATE_PRODUCT:
            raise StepTooLarge(f"dt * max rate = {self.dt * fastest:.3g} > {MAX_STEP_RATE_PRODUCT}")
        if steady:
            need = 10.0 / min(params.kappa, params.gamma / 2)
            if self.burn_in < need:
                raise ValueError(f"burn_in {self.burn_in} shorter than required {need:.3g}")
            if self.burn_in >= self.t_total:
                raise ValueError("burn_in must be shorter than t_total")


@dataclass
class ClickRecord:
    times: np.ndarray
    channels: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.channels = np.asarray(self.channels, dtype=np.int8)
        if self.times.shape != self.channels.shape:
            raise ValueError("times and channels must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("click times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def channel_times(self, channel: int, t_min: float = -np.inf) -> np.ndarray:
        sel = (self.channels == channel) & (self.times >= t_min)
        return self.times[sel]

    def rates(self, duration: float, t_min: float = 0.0) -> dict:
        """Clicks per unit time in each channel over ``[t_min, t_min + duration]``."""
        return {name: len(self.channel_times(ch, t_min)) / duration
                for ch, name in enumerate(CHANNEL_NAMES)}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "channel"])
            for t, ch in zip(self.times, self.channels):
                w.writerow([repr(float(t)), CHANNEL_NAMES[ch]])

    @classmethod
    def from_csv(cls, path) -> "ClickRecord":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([float(r["time"]) for r in rows],
                   [CHANNEL_NAMES.index(r["channel"]) for r in rows])


@dataclass
class ConditionedSample:
    """States right after side clicks, the raw material of the witness estimators."""

    trajectory: np.ndarray
    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.times)


@dataclass
class TrajectoryEnsemble:
    params: SystemParams
    space: HilbertSpace
    config: TrajectoryConfig
    indices: np.ndarray
    records: list
    final_states: np.ndarray
    side_samples: ConditionedSample
    sampled_time: float
    field_integral: np.ndarray
    photon_integral: np.ndarray
    excited_integral: np.ndarray
    rho_integral: np.ndarray
    max_side_excited: float
    n_side_jumps: int
    extras: dict = field(default_factory=dict)

    @property
    def n_side_clicks(self) -> int:
        """Side clicks inside the sampling window (after burn-in)."""
        return len(self.side_samples)

    def click_rates(self) -> dict:
        total = self.sampled_time * len(self.records)
        out = {}
        for ch, name in enumerate(CHANNEL_NAMES):
            out[name] = sum(len(r.channel_times(ch, self.config.burn_in)) for r in self.records) / total
        return out


class _Propagator:
    def __init__(self, h_eff):
        self.h = h_eff

    def __call__(self, s):
        return scipy.linalg.expm(-1j * s * self.h)


def _initial(space, initial_state):
    if initial_state is None:
        return space.basis(0, GROUND)
    psi = np.asarray(initial_state, dtype=complex)
    if psi.shape != (space.dim,):
        raise ValueError(f"initial state must have shape ({space.dim},)")
    return psi / np.linalg.norm(psi)


BLOCK = 128


def _apply(op, states, offset):
    """``op @ states`` in fixed-width column blocks aligned to trajectory index.

    ``states[:, k]`` belongs to trajectory ``offset + k``. BLAS rounds a
    column differently depending on the matrix width and the column's place
    in it, so every product is done on the same aligned, zero-padded block
    shape; a trajectory's state is then bit-for-bit independent of how the
    ensemble is split across workers.
    """
    n = states.shape[1]
    lead = offset % BLOCK
    total = -(-(lead + n) // BLOCK) * BLOCK
    buf = np.zeros((states.shape[0], total), dtype=complex)
    buf[:, lead:lead + n] = states
    out = np.empty((op.shape[0], total), dtype=complex)
    for s in range(0, total, BLOCK):
        out[:, s:s + BLOCK] = op @ buf[:, s:s + BLOCK]
    return out[:, lead:lead + n]


def _run_batch(params, space, config, indices, initial_state, convention):
    h_eff = build_effective_hamiltonian(params, space, convention)
    jumps = jump_operators(params, space, convention)
    prop = _Propagator(h_eff)
    a_op = build_operators(space).a
    n_vec = space.photon_numbers
    e_vec = space.atom_levels
    dt = config.dt
    u_step = prop(dt)
    n_steps = int(round(config.t_total / dt))
    n_traj = len(indices)
    offset = int(indices[0])
    if np.any(np.diff(indices) != 1):
        raise ValueError("trajectory indices of a batch must be consecutive")
    rngs = [np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(int(i),)))
            for i in indices]
    thresholds = np.array([r.random() for r in rngs])
    psi0 = _initial(space, initial_state)
    psi = np.repeat(psi0[:, None], n_traj, axis=1)

    times = [[] for _ in range(n_traj)]
    chans = [[] for _ in range(n_traj)]
    side_traj, side_times, side_states = [], [], []
    max_side_excited = 0.0
    n_side_jumps = 0

    field_int = np.zeros(n_traj, dtype=complex)
    photon_int = np.zeros(n_traj)
    excited_int = np.zeros(n_traj)
    rho_int = np.zeros((space.dim, space.dim), dtype=complex)
    sampled_time = 0.0
    weight = dt * config.sample_every
    first_sample = int(np.ceil(config.burn_in / dt - 1e-9))

    def jump_within(j, start, t0, span):
        # Evolve trajectory j over [t0, t0 + span] from ``start`` handling any jumps.
        nonlocal max_side_excited, n_side_jumps
        phi = start
        elapsed = 0.0
        while True:
            remaining = span - elapsed
            end = prop(remaining) @ phi
            if np.vdot(end, end).real > thresholds[j]:
                return end
            r = thresholds[j]

            def excess(x):
                v = prop(x) @ phi
                return np.vdot(v, v).real - r

            s = brentq(excess, 0.0, remaining, xtol=1e-14, rtol=1e-14)
            phi_j = prop(s) @ phi
            weights = np.array([np.vdot(c @ phi_j, c @ phi_j).real for c in jumps])
            total = weights.sum()
            if total <= 0:
                return end
            ch = int(rngs[j].random() * total >= weights[0])
            phi = jumps[ch] @ phi_j
            phi /= np.linalg.norm(phi)
            elapsed += s
            t_click = t0 + elapsed
            times[j].append(t_click)
            chans[j].append(ch)
            if ch == SIDE:
                n_side_jumps += 1
                max_side_excited = max(max_side_excited, float(e_vec @ np.abs(phi) ** 2))
                if t_click >= config.burn_in:
                    side_traj.append(int(indices[j]))
                    side_times.append(t_click)
                    side_states.append(phi.copy())
            thresholds[j] = rngs[j].random()

    for step in range(n_steps):
        t0 = step * dt
        new = _apply(u_step, psi, offset)
        norms2 = (np.abs(new) ** 2).sum(axis=0)
        crossed = np.nonzero(norms2 <= thresholds)[0]
        for j in crossed:
            new[:, j] = jump_within(j, psi[:, j].copy(), t0, dt)
        psi = new
        if step + 1 >= first_sample and (step + 1 - first_sample) % config.sample_every == 0:
            norms2 = (np.abs(psi) ** 2).sum(axis=0)
            phi = psi / np.sqrt(norms2)
            probs = np.abs(phi) ** 2
            photon_int += weight * (n_vec[:, None] * probs).sum(axis=0)
            excited_int += weight * (e_vec[:, None] * probs).sum(axis=0)
            field_int += weight * (phi.conj() * _apply(a_op, phi, offset)).sum(axis=0)
            rho_int += weight * (phi @ phi.conj().T)
            sampled_time += weight

    norms = np.sqrt((np.abs(psi) ** 2).sum(axis=0))
    records = [ClickRecord(t, c) for t, c in zip(times, chans)]
    order = np.lexsort((side_times, side_traj)) if side_times else np.array([], dtype=int)
    samples = ConditionedSample(
        np.array(side_traj, dtype=int)[order], np.array(side_times)[order],
        np.array(side_states).reshape(-1, space.dim)[order])
    return dict(records=records, final_states=(psi / norms).T, side_samples=samples,
                sampled_time=sampled_time, field_integral=field_int, photon_integral=photon_int,
                excited_integral=excited_int, rho_integral=rho_int,
                max_side_excited=max_side_excited, n_side_jumps=n_side_jumps)


def _run_batch_star(args):
    return _run_batch(*args)


def run_ensemble(params: SystemParams, space: HilbertSpace, config: TrajectoryConfig, *,
                 initial_state=None, first_index: int = 0, n_workers: int = 1,
                 convention: str = "consistent") -> TrajectoryEnsemble:
    """Simulate ``config.n_trajectories`` trajectories.

    Without an explicit ``initial_state`` every trajectory starts in
    ``|0,g>`` and the config must allow a full burn-in, since the
    ensemble is meant for steady-state statistics.
    """
    config.validate(params, steady=initial_state is None)
    indices = np.arange(first_index, first_index + config.n_trajectories)
    if n_workers > 1 and len(indices) > 1:
        chunks = [c for c in np.array_split(indices, n_workers) if len(c)]
        jobs = [(params, space, config, c, initial_state, convention) for c in chunks]
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            parts = list(ex.map(_run_batch_star, jobs))
    else:
        parts = [_run_batch(params, space, config, indices, initial_state, convention)]
    merged = _merge(parts)
    return TrajectoryEnsemble(params=params, space=space, config=config, indices=indices, **merged)


def _merge(parts):
    if len(parts) == 1:
        return parts[0]
    samples = ConditionedSample(
        np.concatenate([p["side_samples"].trajectory for p in parts]),
        np.concatenate([p["side_samples"].times for p in parts]),
        np.concatenate([p["side_samples"].states for p in parts]))
    return dict(
        records=[r for p in parts for r in p["records"]],
        final_states=np.concatenate([p["final_states"] for p in parts]),
        side_samples=samples,
        sampled_time=parts[0]["sampled_time"],
        field_integral=np.concatenate([p["field_integral"] for p in parts]),
        photon_integral=np.concatenate([p["photon_integral"] for p in parts]),
        excited_integral=np.concatenate([p["excited_integral"] for p in parts]),
        rho_integral=sum(p["rho_integral"] for p in parts),
        max_side_excited=max(p["max_side_excited"] for p in parts),
        n_side_jumps=sum(p["n_side_jumps"] for p in parts),
    )


def evolve_trajectory(params: SystemParams, space: HilbertSpace, config: TrajectoryConfig, *,
                      index: int = 0, initial_state=None):
    """Single trajectory ``index`` of the ensemble defined by ``config``.

    Returns ``(final_state, ClickRecord)``; identical to member ``index``
    of :func:`run_ensemble` with the same config.
    """
    single = TrajectoryConfig(config.dt, config.t_total, 1, config.seed, config.burn_in,
                              config.sample_every)
    single.validate(params, steady=False)
    out = _run_batch(params, space, single, np.array([index]), initial_state, "consistent")
    return out["final_states"][0], out["records"][0]


class Estimate(NamedTuple):
    value: float
    stderr: float
    n_clicks: int


def _bootstrap(stat, n_groups, n_boot, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31 - 1,)))
    reps = np.empty(n_boot)
    for b in range(n_boot):
        reps[b] = stat(rng.integers(0, n_groups, n_groups))
    return float(np.std(reps, ddof=1))


def _per_trajectory(ensemble, values):
    pos = {int(i): k for k, i in enumerate(ensemble.indices)}
    rows = np.array([pos[int(t)] for t in ensemble.side_samples.trajectory], dtype=int)
    n = len(ensemble.indices)
    sums = np.zeros(n, dtype=np.result_type(values, float))
    np.add.at(sums, rows, values)
    counts = np.bincount(rows, minlength=n).astype(float)
    return sums, counts


def _require(ensemble, min_clicks):
    if ensemble.n_side_clicks < min_clicks:
        raise InsufficientStatistics(
            f"{ensemble.n_side_clicks} side clicks after burn-in, need {min_clicks}")


def _windowed_expectations(ensemble, op_diag, window, n_nodes=33):
    states = ensemble.side_samples.states
    if window <= 0:
        return (np.abs(states) ** 2) @ op_diag
    h_eff = build_effective_hamiltonian(ensemble.params, ensemble.space)
    nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
    s = 0.5 * window * (nodes + 1)
    props = np.stack([scipy.linalg.expm(-1j * x * h_eff) for x in s])
    evolved = np.einsum("kij,mj->mki", props, states)
    prob = np.abs(evolved) ** 2
    vals = (prob @ op_diag) / prob.sum(axis=2)
    return vals @ (0.5 * wts)


def estimate_g2_tf(ensemble: TrajectoryEnsemble, window: float = 0.0, *, method: str = "conditional",
                   min_clicks: int = 1000, n_boot: int = 1000) -> Estimate:
    """Zero-delay transmitted/fluorescence intensity cross-correlation.

    ``method="conditional"`` replaces the mirror click count after each
    side click by its conditional expectation: the intracavity photon
    number of the post-click state, averaged over ``[0, window]`` of
    no-jump evolution (``window=0`` is the instantaneous value). It is
    normalized by the time-averaged photon number. ``method="coincidence"``
    counts actual mirror clicks within ``window/2`` of each side click.

    Standard errors come from a bootstrap over trajectories.
    """
    _require(ensemble, min_clicks)
    if method == "coincidence":
        return coincidence_g2(ensemble.records, window, ensemble.config.burn_in,
                              ensemble.config.t_total, n_boot=n_boot, seed=ensemble.config.seed)
    if method != "conditional":
        raise ValueError(f"unknown method {method!r}")
    vals = _windowed_expectations(ensemble, ensemble.space.photon_numbers, window)
    sums, counts = _per_trajectory(ensemble, vals)
    photon = ensemble.photon_integral
    t = ensemble.sampled_time

    def stat(idx):
        return (sums[idx].sum() / counts[idx].sum()) / (photon[idx].sum() / (t * len(idx)))

    full = np.arange(len(sums))
    return Estimate(float(stat(full)), _bootstrap(stat, len(sums), n_boot, ensemble.config.seed),
                    ensemble.n_side_clicks)


def coincidence_g2(records, window: float, t_start: float, t_end: float, *,
                   n_boot: int = 1000, seed: int = 0) -> Estimate:
    """Click-counting g2 between side (trigger) and mirror channels.

    Counts mirror clicks within ``window/2`` of each side click in
    ``[t_start, t_end]`` and divides by the number expected for
    independent streams at the observed mirror rate.
    """
    if window <= 0:
        raise ValueError("coincidence window must be positive")
    duration = t_end - t_start
    coinc = np.zeros(len(records))
    triggers = np.zeros(len(records))
    mirrors = np.zeros(len(records))
    half = window / 2
    for k, rec in enumerate(records):
        side = rec.channel_times(SIDE, t_start)
        side = side[(side >= t_start + half) & (side <= t_end - half)]
        mirror = rec.channel_times(MIRROR, t_start)
        mirror = mirror[mirror <= t_end]
        lo = np.searchsorted(mirror, side - half, side="left")
        hi = np.searchsorted(mirror, side + half, side="right")
        coinc[k] = (hi - lo).sum()
        triggers[k] = len(side)
        mirrors[k] = len(mirror)
    if triggers.sum() == 0 or mirrors.sum() == 0:
        raise InsufficientStatistics("no side or mirror clicks in the analysis window")

    def stat(idx):
        rate = mirrors[idx].sum() / (duration * len(idx))
        return coinc[idx].sum() / (triggers[idx].sum() * rate * window)

    full = np.arange(len(records))
    return Estimate(float(stat(full)), _bootstrap(stat, len(records), n_boot, seed), int(triggers.sum()))


def estimate_h_tf(ensemble: TrajectoryEnsemble, *, min_clicks: int = 1000, n_boot: int = 1000) -> Estimate:
    """Conditioned-homodyne field-intensity correlation.

    Mean field quadrature of the post-side-click states over the
    unconditioned mean quadrature, the local oscillator locked to the
    phase of the time-averaged mean field.
    """
    _require(ensemble, min_clicks)
    a_op = build_operators(ensemble.space).a
    states = ensemble.side_samples.states
    post = np.einsum("mi,ij,mj->m", states.conj(), a_op, states)
    sums, counts = _per_trajectory(ensemble, post)
    fld = ensemble.field_integral
    t = ensemble.sampled_time

    def stat(idx):
        mean_field = fld[idx].sum() / (t * len(idx))
        phase = mean_field / abs(mean_field)
        cond = sums[idx].sum() / counts[idx].sum()
        return (np.conj(phase) * cond).real / abs(mean_field)

    full = np.arange(len(sums))
    return Estimate(float(stat(full)), _bootstrap(stat, len(sums), n_boot, ensemble.config.seed),
                    ensemble.n_side_clicks)


def window_extrapolation(ensemble: TrajectoryEnsemble, windows, **kwargs) -> dict:
    """g2 estimates over a range of windows plus a linear extrapolation to zero width."""
    windows = np.asarray(windows, dtype=float)
    ests = [estimate_g2_tf(ensemble, w, **kwargs) for w in windows]
    vals = np.array([e.value for e in ests])
    slope, intercept = np.polyfit(windows, vals, 1) if len(windows) > 1 else (0.0, vals[0])
    return {"windows": windows, "estimates": ests, "extrapolated": float(intercept), "slope": float(slope)}


def ensemble_average(ensemble: TrajectoryEnsemble) -> DensityOperator:
    """Time-and-ensemble averaged projector onto the conditional state."""
    if ensemble.sampled_time <= 0:
        raise ValueError("ensemble has no samples after burn-in")
    rho = ensemble.rho_integral / np.trace(ensemble.rho_integral)
    return DensityOperator(rho, ensemble.space)


def write_clicks_csv(ensemble: TrajectoryEnsemble, path):
    """All click records as ``trajectory,time,channel`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory", "time", "channel"])
        for idx, rec in zip(ensemble.indices, ensemble.records):
            for t, ch in zip(rec.times, rec.channels):
                w.writerow([int(idx), repr(float(t)), CHANNEL_NAMES[ch]])
