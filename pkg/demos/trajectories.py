"""
Quantum-jump unraveling: clicks, conditioned states, witnesses
==============================================================

Two output channels: photons through the mirror (rate 2 kappa <a^dag a>)
and fluorescence out the side (rate gamma <sigma+ sigma->).  A side click
projects the atom to the ground state and leaves the field in a state
with enhanced photon number; that enhancement is g2_TF.

Takes roughly half a minute.
"""
import numpy as np

from cqed_entanglement import HilbertSpace, SystemParams, normalized_correlations, observables, solve
from cqed_entanglement.trajectories import (TrajectoryConfig, ensemble_average, estimate_g2_tf,
                                            estimate_h_tf, run_ensemble, window_extrapolation)

params = SystemParams(g=1.0, kappa=0.5, gamma=1.0, epsilon=0.1)
space = HilbertSpace(4)
cfg = TrajectoryConfig(dt=0.05, t_total=2040.0, n_trajectories=400, seed=11, burn_in=40.0,
                       sample_every=5)

ens = run_ensemble(params, space, cfg)
rho = solve(params, 4)
obs = observables(rho)
ref = normalized_correlations(obs)

rates = ens.click_rates()
print(f"mirror clicks per unit time {rates['mirror']:.5f}  (ME {2 * params.kappa * obs.mean_photon:.5f})")
print(f"side clicks per unit time   {rates['side']:.5f}  (ME {params.gamma * obs.excited_pop:.5f})")
print(f"side clicks after burn-in   {ens.n_side_clicks}")
print(f"atom excitation right after a side click, max over all jumps: {ens.max_side_excited}")

g2 = estimate_g2_tf(ens)
h = estimate_h_tf(ens)
print(f"\ng2_TF  {g2.value:.4f} +- {g2.stderr:.4f}   master equation {ref.g2_tf:.4f}")
print(f"h_TF   {h.value:.4f} +- {h.stderr:.4f}   master equation {ref.h_tf:.4f}")

# averaging the post-click photon number over a finite window after the click
ext = window_extrapolation(ens, [0.02, 0.05, 0.1, 0.2])
for w, e in zip(ext["windows"], ext["estimates"]):
    print(f"  window {w:4.2f}: g2 {e.value:.4f}")
print(f"  extrapolated to zero width: {ext['extrapolated']:.4f}")

# the time- and ensemble-averaged projector reproduces the steady state
avg = ensemble_average(ens)
print(f"\n|| rho_traj - rho_ME ||_max = {np.abs(avg.matrix - rho.matrix).max():.2e}")
