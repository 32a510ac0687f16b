"""
Full Lindblad steady state against the weak-drive formulas
==========================================================
"""
import numpy as np

from cqed_entanglement import (SystemParams, coherence_amplitudes, correlation_set, detuned_amplitudes,
                               entanglement_report, normalized_correlations, observables, solve,
                               truncation_convergence)
from cqed_entanglement.sweep import verify_pipeline

base = SystemParams(g=1.0, kappa=0.5, gamma=1.0, epsilon=0.01)

# residual gap between the exact steady state and the leading-order result
print(f"{'eps':>8} {'g2_TF gap':>12} {'h_TF gap':>12} {'C gap':>12} {'1-Tr rho^2':>12}")
for eps in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3):
    p = base.replace(epsilon=eps)
    rho = solve(p, 4)
    me = normalized_correlations(observables(rho))
    an = correlation_set(detuned_amplitudes(p))
    c_me = entanglement_report(coherence_amplitudes(rho, p)).concurrence
    c_an = entanglement_report(detuned_amplitudes(p)).concurrence
    print(f"{eps:8.0e} {abs(me.g2_tf / an.g2_tf - 1):12.3e} {abs(me.h_tf / an.h_tf - 1):12.3e} "
          f"{abs(c_me / c_an - 1):12.3e} {1 - rho.purity:12.3e}")

# the gaps fall by ~100x per decade: the next order is eps^2
# purity defect falls by ~10^4 per decade: mixing needs a click out of the two-excitation manifold

# off resonance too
p = base.replace(epsilon=1e-3, delta=0.8)
me = normalized_correlations(observables(solve(p, 4)))
an = correlation_set(detuned_amplitudes(p))
print(f"\ndelta=0.8: g2_TF {me.g2_tf:.6f} (ME) vs {an.g2_tf:.6f} (weak drive)")

# is four photons enough?
rep = truncation_convergence(base.replace(epsilon=0.1), [2, 3, 4, 5, 6])
print("\ntruncation, eps=0.1: largest relative change per step", [f"{d:.1e}" for d in rep.max_delta()])

print()
print(verify_pipeline(base).to_text())
