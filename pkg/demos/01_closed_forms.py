"""Closed-form SIS solutions on one Brownian path.

Run with ``python demos/01_closed_forms.py``. Prints the deterministic
curve, the Stratonovich solution and the polygonal (Wong-Zakai) solution at
a few times, then shows the polygonal solution approaching the Stratonovich
one as the path is refined.
"""

# %% parameters: R0 = 2, so the deterministic curve settles at N(1 - 1/R0) = 50
import numpy as np

from sisde import (SisParams, TimeGrid, deterministic_solution, refine_bridge, sample_path,
                   stratonovich_exact, wong_zakai_exact)
from sisde.params import derived_constants

p = SisParams(N=100.0, beta=0.5, mu_plus_gamma=25.0, sigma=0.02, i0=10.0)
print(derived_constants(p))

# %% one path, three solutions
path = sample_path(TimeGrid(1.0, 2**8), seed=0x5155)
det = deterministic_solution(p, path.grid)
strat = stratonovich_exact(p, path)
wz = wong_zakai_exact(p, path)
for k in range(0, 257, 32):
    print(f"t={path.grid.knots[k]:.3f}  det={det.states[k]:8.4f}  "
          f"strat={strat.states[k]:8.4f}  wz={wz.states[k]:8.4f}")

# %% refine the path with Brownian bridges; the polygonal solution converges
ref = path
for _ in range(8):
    ref = refine_bridge(ref)
target = stratonovich_exact(p, ref)
coarse = path
for level in range(7):
    step = ref.grid.n_cells // coarse.grid.n_cells
    err = np.max(np.abs(wong_zakai_exact(p, coarse).states - target.states[::step]))
    print(f"cells={coarse.grid.n_cells:6d}  sup-knot error={err:.3e}")
    coarse = refine_bridge(coarse)
