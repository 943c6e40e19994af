"""GP-mode Gronwall envelope at t=1: slow decay driven by N^-gamma e^{C (ln N)^(1/3)}."""
from condensate_lab.experiments import gronwall_envelope

for gamma in (0.1, 0.2):
    vals = [(N, gronwall_envelope(0.0, 1.0, N, 1.0, "gp", gamma=gamma))
            for N in (1e3, 1e4, 1e5, 1e6, 1e9, 1e15)]
    print(f"gamma={gamma}: " + "  ".join(f"N={N:.0e}: {v:.4f}" for N, v in vals))
