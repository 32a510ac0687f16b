"""
Entanglement landscape over coupling, damping and detuning
==========================================================

Everything here is the drive-independent ratio C/eps^2.  Pass an output
directory as the first argument to also write the grids as CSV.
"""
import sys
from pathlib import Path

import numpy as np

from cqed_entanglement import SystemParams
from cqed_entanglement.sweep import (SweepAxis, SweepSpec, find_peak, find_schwarz_counterexample,
                                     fit_detuning_slope, run_sweep)

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else None

# --- coupling vs cavity damping, resonant drive
spec = SweepSpec((SweepAxis("g", 0.05, 10, 101, "log"), SweepAxis("kappa", 0.05, 10, 101, "log")),
                 quantities=("concurrence_scaled",))
res = run_sweep(spec)
grid = res.grid("concurrence_scaled")
g_vals, k_vals = (a.values() for a in spec.axes)
i, j = np.unravel_index(grid.argmax(), grid.shape)
print(f"(g, kappa) grid max C/eps^2 = {grid.max():.4f} at g={g_vals[i]:.3f}, kappa={k_vals[j]:.3f}")
for kappa in (0.5, 1.0, 10.0):
    col = np.abs(k_vals - kappa).argmin()
    print(f"  kappa~{k_vals[col]:.2f}: best g on grid {g_vals[grid[:, col].argmax()]:.3f}")
if out_dir:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "g_kappa.csv", "w") as fh:
        res.to_csv(fh)

# --- refined peaks along g
base = SystemParams(1.0, 10.0, 1.0, 1.0)
strong = find_peak("concurrence_scaled", base, "g", 0.1, 20)
weak = find_peak("concurrence_scaled", base.replace(kappa=0.5), "g", 0.05, 20)
print(f"\nkappa=10:  peak at g={strong.argmax:.5f}, C/eps^2={strong.max_value:.5f}")
print(f"kappa=0.5: peak at g={weak.argmax:.5f}, C/eps^2={weak.max_value:.5f}")
print(f"ratio of peak heights {weak.max_value / strong.max_value:.2f}")

# --- coupling vs detuning at kappa = 0.5
spec = SweepSpec((SweepAxis("g", 0.1, 6, 121, "log"), SweepAxis("delta", -4, 4, 81)),
                 fixed={"kappa": 0.5}, quantities=("concurrence_scaled",))
res = run_sweep(spec)
grid = res.grid("concurrence_scaled")
gs, ds = (a.values() for a in spec.axes)
k = grid[:, 40].argmax()
print(f"\nresonant peak g={gs[k]:.3f}; along delta at that g the max sits at delta={ds[grid[k].argmax()]:+.2f}")
print(f"value there {grid[k].max():.4f} vs {grid[k, 40]:.4f} on resonance (a saddle, not a summit)")
if out_dir:
    with open(out_dir / "g_delta.csv", "w") as fh:
        res.to_csv(fh)

# --- large detuning tail
for lo, hi in ((30, 300), (3e3, 3e4)):
    fit = fit_detuning_slope(SystemParams(1.0, 0.5, 1.0, 1e-3), (lo, hi))
    print(f"log-log slope of C vs delta on [{lo:g}, {hi:g}]: {fit.slope:.4f}")

# --- an entangled point that does not violate the Schwarz bound
hit = find_schwarz_counterexample()
print(f"\nSchwarz bound satisfied yet entangled: g={hit.params.g}, kappa={hit.params.kappa}, "
      f"C/eps^2={hit.concurrence_scaled:.3e}, lhs={hit.lhs:.3e} <= rhs={hit.rhs:.3e}")
