"""Eigenvalues of -y'' + q(x) y(a) = lambda y for a constant potential.

With alpha = beta = 0 and a = pi/2 every second eigenvalue stays pinned at
(2n)^2 whatever q is; the others move.  The argument-principle count is
printed alongside, as a check that no eigenvalue was skipped.
"""

import numpy as np

from frozen_sl import Grid, Potential, ProblemConfig, compute_spectrum, check_degeneration_spectrum

cfg = ProblemConfig(alpha=0, beta=0, k=2)
q = Potential.from_cos([1.0], Grid.for_frequency(cfg.k, 30))

spec = compute_spectrum(q, cfg, 12)
print(f"case {cfg.case.value}, degenerate={cfg.degenerate}")
print(" n   lambda_n            n^2")
for n, lam in enumerate(spec.values, start=1):
    print(f"{n:2d}   {lam.real:16.10f}   {n * n:4d}")

print("contour count:", spec.info["verification"])
rep = check_degeneration_spectrum(spec)
print("forced indices", rep.indices.tolist(), "max deviation", f"{rep.max_deviation:.1e}")

# residuals n (sqrt(lambda_n) - n) decay, the asymptotic shape of the spectrum
kappa = spec.residuals
print("|kappa_n|:", np.array2string(np.abs(kappa), precision=3))
