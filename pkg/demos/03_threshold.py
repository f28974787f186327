"""Extinction below the threshold, recurrence above it.

Run with ``python demos/03_threshold.py`` (about half a minute).
"""

# %% two parameter sets on either side of delta = N beta - (mu + gamma) = 0
import numpy as np

from sisde import ExperimentConfig, SisParams, recurrence_classify, run_ensemble, scale_function
from sisde.framework import classify, model_triple

extinct = SisParams(N=100.0, beta=0.2, mu_plus_gamma=25.0, sigma=0.02, i0=10.0)
persistent = extinct.replace(beta=0.5)
for p in (extinct, persistent):
    c = classify(model_triple("strat-corrected", p))
    r = recurrence_classify(p)
    print(f"delta={p.delta:+.1f}  eta verdict={c.verdict.value}  scale verdict={r.verdict.value}")

# %% Lyapunov rates ln I(T) / T: the explicit solution predicts delta = -5
rep = run_ensemble(ExperimentConfig(extinct, t_end=200.0, cells=200 * 2**6, n_paths=50,
                                    scheme="logodds_euler", model="stratonovich"))
print("Lyapunov mean / max:", rep.lyapunov["mean"], rep.lyapunov["max"])

# %% above the threshold paths keep crossing the band around xi
rep = run_ensemble(ExperimentConfig(persistent, t_end=50.0, cells=50 * 2**8, n_paths=20,
                                    scheme="logodds_euler", model="stratonovich"))
print("xi:", rep.bracket["xi"], " median upcrossings:", rep.crossings["median"],
      " bracket fraction:", rep.bracket["fraction"])

# %% the scale function, in log-odds y = ln(I / (N - I)), diverges at both
# ends exactly when delta >= 0; below the threshold psi(-inf) stays finite
for p in (persistent, extinct):
    print([f"psi({y:g})={scale_function(p, y):.3e}" for y in (-40.0, -20.0, -1.0, 1.0)])
print("terminal quantiles:", {k: round(v, 3) for k, v in rep.quantiles.items()})
print("sd of terminal states:", np.round(rep.sd, 3))
