"""Supercooled Stefan fronts for several latent-heat parameters against the small-alpha expansion."""
from _common import save
from heatpot.stefan import StefanParams, small_alpha_reference, solve

Z, T, N = 1.0, 1.0, 400
alphas = (0.01, 0.1, 0.2, 0.5, 1.0)
sols = {a: solve(StefanParams(a, Z, T, N)) for a in alphas}
grid = sols[0.01].b.grid
save("stefan_fronts.csv", dict(z=Z, T=T, N=N),
     ["t"] + [f"b_alpha{a:g}" for a in alphas] + ["b_small_alpha0.01"],
     [grid.nodes] + [sols[a].b.values for a in alphas]
     + [small_alpha_reference(0.01, Z, grid).values])
