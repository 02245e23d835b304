"""A potential odd about pi/2 is invisible when alpha = beta = 0 and a = pi/2.

Its characteristic function equals the unperturbed sin(pi rho)/rho, so the
spectrum is n^2 exactly.
"""

import numpy as np

from frozen_sl import Grid, Potential, ProblemConfig, compute_spectrum, eval_delta_direct

cfg = ProblemConfig(0, 0, 2)
q = Potential.from_cos([0, 1.0, 0, -0.5j, 0, 2.0], Grid.for_frequency(cfg.k, 30))

rho = np.linspace(0.25, 20, 9)
delta = eval_delta_direct(rho**2, q, cfg)
print("max |Delta - sin(pi rho)/rho| =", np.max(np.abs(delta - np.sin(np.pi * rho) / rho)))
print("spectrum:", np.round(compute_spectrum(q, cfg, 10).values.real, 10))
