"""Hartree-regime sweep: alpha_T vs N with the fitted Gronwall envelope.

    python3 scripts/convergence_sweep.py [config.toml] [out_dir]
"""
import sys
from pathlib import Path

from condensate_lab.experiments import SweepConfig, run_convergence

cfg_path = sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parents[1] / "configs/hartree.toml"
cfg = SweepConfig.from_toml(cfg_path)
out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path(cfg.out)
records = run_convergence(cfg, out)

print(f"{'N':>3} {'alpha':>12} {'alpha2':>12} {'C_fit':>8} {'cond2*N':>10}")
for r in records:
    if not r.ok:
        print(f"{r.N:3d} failed: {r.error}")
        continue
    last = r.rows[-1]
    print(f"{r.N:3d} {last['alpha']:12.5e} {last['alpha2']:12.5e} {r.C_fit:8.4f} "
          f"{r.conditions['cond2'] * r.N:10.6f}")
ratio = records[-1].alpha_T / records[0].alpha_T
print(f"tracked {records[0].tracked}: alpha_T(N={records[-1].N}) / alpha_T(N={records[0].N}) = {ratio:.3f}")
