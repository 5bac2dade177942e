"""Loss cascade for a range of interaction strengths, with blow-up times under refinement."""
import numpy as np

from _common import save
from heatpot.meanfield import MeanFieldParams, solve

Z, T, N = 0.5, 5.0, 1000
alphas = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2)
sols = {a: solve(MeanFieldParams(a, Z, T, N)) for a in alphas}
t = sols[0.0].L.t
save("meanfield_loss.csv", dict(z=Z, T=T, N=N, alphas=",".join(map(str, alphas))),
     ["t"] + [f"L_alpha{a:g}" for a in alphas], [t] + [sols[a].L.values for a in alphas])
s = sols[0.6]
save("meanfield_alpha0.6.csv", dict(alpha=0.6, z=Z, T=T, N=N), ["t", "L", "mu", "nu"],
     [t, s.L.values, s.mu.values, s.nu.values], {"max_residual": f"{s.report.max_residual:.2e}"})

rows = []
for N_ in (500, 1000, 2000, 4000):
    rows.append((N_, solve(MeanFieldParams(1.2, Z, T, N_)).blowup_time))
save("meanfield_blowup.csv", dict(alpha=1.2, z=Z, T=T), ["N", "blowup_time"],
     [np.array([r[0] for r in rows]), np.array([r[1] for r in rows])])
