"""Which Ito equation is the Stratonovich model?

Euler-Maruyama on the corrected drift converges to the Stratonovich closed
form; on the uncorrected (Gray et al.) drift it converges somewhere else.
Run with ``python demos/02_ito_vs_stratonovich.py``.
"""

# %% a noise level where the two Ito drifts separate visibly
from sisde import ExperimentConfig, SisParams, scheme_cross_check
from sisde.params import ito_persistence_level
from sisde.framework import eta_root, model_triple

p = SisParams(N=100.0, beta=0.5, mu_plus_gamma=25.0, sigma=0.03, i0=10.0)
print("persistence level, corrected model:", eta_root(model_triple("strat-corrected", p)))
print("persistence level, Gray model:     ", ito_persistence_level(p))

# %% strong error at T = 1 against the closed form, medians over 100 paths
cfg = ExperimentConfig(p, t_end=1.0, cells=64, refinement_levels=5, n_paths=100, base_seed=2)
corrected, gray = scheme_cross_check(cfg)
print(f"{'mesh':>10} {'corrected':>12} {'gray':>12}")
for h, a, b in zip(corrected.mesh, corrected.median, gray.median):
    print(f"{h:10.2e} {a:12.4e} {b:12.4e}")
