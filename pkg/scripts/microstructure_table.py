"""Compensating shelf and zero-energy profile over N and the two exponents."""
import numpy as np

from condensate_lab.experiments import ScatterConfig, scatter_sweep

rows = scatter_sweep(ScatterConfig())
print(f"{'b1':>6} {'b2':>4} {'N':>6} {'a':>8} {'R_out':>8} {'l2/bd':>7} {'l1/bd':>7} {'eig':>8}")
for r in rows:
    print(f"{r['beta1']:6.3f} {r['beta2']:4.2f} {r['N']:6d} {r['a']:8.5f} {r['R_out']:8.5f} "
          f"{r['l2_g'] / r['bound_l2']:7.3f} {r['l1_g'] / r['bound_l1']:7.3f} {r['lowest_eig']:8.3f}")

# outer radius against N^-beta1
for b1 in sorted({r["beta1"] for r in rows}):
    for b2 in sorted({r["beta2"] for r in rows}):
        sel = [r for r in rows if r["beta1"] == b1 and r["beta2"] == b2]
        slope = np.polyfit(np.log([r["N"] for r in sel]), np.log([r["R_out"] for r in sel]), 1)[0]
        print(f"beta1={b1:.3f} beta2={b2:.2f}: R_out ~ N^{slope:.4f}")
