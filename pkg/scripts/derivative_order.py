"""Centered difference of <n> vs the two-term derivative formula under dt-halving."""
from condensate_lab.experiments import SweepConfig, derivative_identity_report

cfg = SweepConfig(N_list=(3,), M=6, L=6.0, T=1.0,
                  interaction={"preset": "gaussian", "strength": 4.0, "range": 1.0})
rep = derivative_identity_report(cfg, 3, [0.04, 0.02, 0.01, 0.005])
for dt, e in zip(rep["dt"], rep["errors"]):
    print(f"dt={dt:<6g} max error {e:.3e}")
print("orders:", " ".join(f"{o:.3f}" for o in rep["orders"]))
