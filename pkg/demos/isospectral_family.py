"""Different potentials, one spectrum.

For alpha = beta = 0 and a = pi/2 the spectrum says nothing about q on
(0, a) once q on (a, pi) is adjusted to match.  Prescribing q(x) = p(a - x)
on (0, a) for several p yields a family whose eigenvalues coincide.
"""

import numpy as np

from frozen_sl import Grid, Potential, ProblemConfig, compute_spectrum, isospectral_family

cfg = ProblemConfig(0, 0, 2)
q = Potential.from_cos([1.0], Grid.for_frequency(cfg.k, 62))
spec = compute_spectrum(q, cfg, 60)

ps = {
    "p = 0": np.zeros_like,
    "p = 1": np.ones_like,
    "p = cos 4x": lambda x: np.cos(4 * x),
}
family = isospectral_family(spec, cfg, list(ps.values()))

spectra = [compute_spectrum(m, cfg, 15).values for m in family]
for (name, _), member, s in zip(ps.items(), family, spectra):
    print(f"{name:12s} ||q||_(0,a) = {member.block_l2_norm(0):.4f}  "
          f"max |lambda - lambda_ref| = {np.max(np.abs(s - spectra[0])):.2e}")
