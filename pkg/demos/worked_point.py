"""
Weak-drive amplitudes at a single operating point
=================================================

g = 1, kappa = 0.5, gamma = 1 (rates in units of gamma), drive 0.01.
"""
import numpy as np

from cqed_entanglement import (SystemParams, concurrence_closed_form, correlation_set,
                               entanglement_report, resonant_amplitudes, witness_identity_check)

params = SystemParams(g=1.0, kappa=0.5, gamma=1.0, epsilon=0.01)
amps = resonant_amplitudes(params)

# cooperativities and the two saturation parameters
print(f"C1 = {amps.c1:g}   C1' = {amps.c1p:g}")
print(f"p  = {amps.p.real:g}   q  = {amps.q.real:.6f}")

# one-excitation amplitudes: alpha is real, beta is imaginary in this frame
print(f"alpha = {amps.alpha:.6g}   beta = {amps.beta:.6g}")
print(f"two-excitation: A2g = {amps.a2g:.4e}   A1e = {amps.a1e:.4e}")

rep = entanglement_report(amps)
print(f"\nconcurrence      {rep.concurrence:.6e}")
print(f"closed form      {concurrence_closed_form(params):.6e}")
print(f"entropy (bits)   {rep.entropy:.4e}")
print(f"lambda1          {rep.lambda1:.4e}")

# the product A1g*A0e would make the state separable; entanglement is the mismatch
print(f"|A1g A0e - A1e|  {rep.factorization_defect:.4e}")

corr = correlation_set(amps)
print(f"\ng2_TF = {corr.g2_tf:.6f}  (q^2 = {amps.q.real**2:.6f})")
print(f"h_TF  = {corr.h_tf:.6f}")
print(f"g2_TT = {corr.g2_tt:.6f}   g2_FF = {corr.g2_ff:g}")
print(f"Schwarz: lhs {corr.schwarz_lhs:.4f} vs rhs {corr.schwarz_rhs:.4f} -> violated={corr.schwarz_violated}")

# concurrence read back from the measurable witness h_TF - 1
chk = witness_identity_check(params)
print(f"\nC from witness   {chk.c_from_witness:.6e}  (rel gap {abs(chk.c_from_witness / rep.concurrence - 1):.1e})")

# drive scaling: one-excitation linear, two-excitation quadratic
twice = resonant_amplitudes(params.replace(epsilon=0.02))
print(f"doubling eps: A1g x{abs(twice.a1g / amps.a1g):.3f}, A1e x{abs(twice.a1e / amps.a1e):.3f}, "
      f"C x{entanglement_report(twice).concurrence / rep.concurrence:.3f}")
