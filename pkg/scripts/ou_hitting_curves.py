"""OU hitting-time densities: zero boundary against images, and moving boundaries."""
import numpy as np

from _common import save
from heatpot.core import ExponentialPair, Flat, Sinusoid
from heatpot.ou_hitting import OUHittingInput, images_zero_boundary, solve_general

T = 2.0
d = solve_general(OUHittingInput(2.0, Flat(0.0), T), 500)
ref = images_zero_boundary(2.0, d.pdf.grid)
save("ou_zero_boundary.csv", dict(z=2.0, boundary="flat:0", T=T, N=500),
     ["t", "pdf", "cdf", "pdf_images", "cdf_images"],
     [d.t, d.pdf.values, d.cdf.values, ref.pdf.values, ref.cdf.values])

t = np.linspace(0.0, T, 401)
cols, names = [t], ["t"]
for name, b, z in (("sin", Sinusoid(0.0, 0.2, 10.0), 2.0), ("exp", ExponentialPair(1.0, 1.0), 3.0),
                   ("flat1", Flat(1.0), 2.0)):
    g, G = solve_general(OUHittingInput(z, b, T), 2000).resample(t)
    cols += [g, G]
    names += [f"pdf_{name}", f"cdf_{name}"]
save("ou_moving_boundaries.csv", dict(T=T, N=2000), names, cols)
