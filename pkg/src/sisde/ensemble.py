"""Monte Carlo ensembles and convergence studies.

Paths are grouped into fixed blocks of ``block_size`` consecutive indices;
block composition depends only on the config, and blocks are merged by
index, so reports are identical for any worker count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .asymptotics import crossing_count, lyapunov_rates
from .config import SCHEMA_VERSION, ExperimentConfig
from .exact import stratonovich_log_odds, wong_zakai_log_odds
from .framework import NoSignChange, eta_root, model_triple
from .integrators import em_kernel, simulate_values
from .noise import BrownianPath, TimeGrid, path_seed, refine_bridge, sample_path, sample_values
from .trajectory import TINY, from_log_odds

__all__ = [
    "EnsembleReport",
    "ConvergenceTable",
    "run_ensemble",
    "wz_convergence_study",
    "scheme_cross_check",
    "persistence_level",
    "report_json",
]

QUANTILES = (5, 25, 50, 75, 95)


def _blocks(n: int, size: int):
    return [list(range(i, min(i + size, n))) for i in range(0, n, size)]


def _map_blocks(fn, cfg: ExperimentConfig, blocks, workers: int):
    if workers <= 1 or len(blocks) <= 1:
        return [fn(cfg, b) for b in blocks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, [cfg] * len(blocks), blocks))


def persistence_level(cfg: ExperimentConfig) -> Optional[float]:
    """Zero of eta for the simulated model, or None when it has none."""
    name = "ito-gray" if cfg.model == "ito_gray" else "strat-corrected"
    try:
        return eta_root(model_triple(name, cfg.params))
    except NoSignChange:
        return None


def _band(cfg: ExperimentConfig, xi: Optional[float]):
    if cfg.band is not None:
        return cfg.band
    if xi is None:
        return None
    w = cfg.params.N / 20
    lo, hi = max(xi - w, TINY), min(xi + w, cfg.params.N * (1 - 1e-12))
    return (lo, hi)


def _simulate_block(cfg: ExperimentConfig, idx):
    p = cfg.params
    grid = TimeGrid(cfg.t_end, cfg.cells)
    values = sample_values(grid, [path_seed(cfg.base_seed, i) for i in idx])
    if cfg.scheme in ("stratonovich_exact", "wong_zakai_exact"):
        fn = stratonovich_log_odds if cfg.scheme == "stratonovich_exact" else wong_zakai_log_odds
        J = fn(p, values, grid.dt)
        cols = [from_log_odds(J[:, j], p.N, p.i0) for j in range(J.shape[1])]
        states = np.stack([c[0] for c in cols], axis=1)
        log_states = np.stack([c[1] for c in cols], axis=1)
        clamps = np.zeros(len(idx), dtype=np.int64)
        fixed = np.array([c[2] for c in cols])
    else:
        states, log_states, clamps, fixed = simulate_values(p, values, grid.dt, cfg.spec)
    if log_states is None:
        with np.errstate(divide="ignore"):
            log_states = np.log(states)
    xi = persistence_level(cfg)
    band = _band(cfg, xi)
    out = {
        "terminal": states[-1].copy(),
        "log_terminal": log_states[-1].copy(),
        "lyapunov": lyapunov_rates(grid.knots, log_states, cfg.burn_in_fraction),
        "clamps": np.broadcast_to(clamps, (len(idx),)).copy(),
        "fixed": np.broadcast_to(fixed, (len(idx),)).copy(),
        "crossings": crossing_count(states, *band) if band else None,
        "bracket": None,
    }
    start = int(math.floor((1 - cfg.window_fraction) * cfg.cells))
    if xi is not None and cfg.cells - start >= 100:
        w = states[start:]
        out["bracket"] = (w.min(axis=0) < xi) & (xi < w.max(axis=0))
    return out


def _f(x) -> float:
    return float(x)


@dataclass
class EnsembleReport:
    config: dict
    n_paths: int
    terminal: list
    underflow: list
    mean: float
    sd: float
    quantiles: dict
    lyapunov: dict
    clamp_total: int
    fixed_total: int
    crossings: Optional[dict]
    bracket: Optional[dict]
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Primary content only; wall-clock timing lives in the sidecar log."""
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "ensemble",
            "config": self.config,
            "n_paths": self.n_paths,
            "terminal": self.terminal,
            "underflow": self.underflow,
            "mean": self.mean,
            "sd": self.sd,
            "quantiles": self.quantiles,
            "lyapunov": self.lyapunov,
            "clamp_total": self.clamp_total,
            "fixed_total": self.fixed_total,
            "crossings": self.crossings,
            "bracket": self.bracket,
        }


def report_json(obj) -> str:
    d = obj.to_dict() if hasattr(obj, "to_dict") else obj
    return json.dumps(d, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _report_config(cfg: ExperimentConfig) -> dict:
    """Configuration recorded in a report; the output location is not a result."""
    d = cfg.to_dict()
    d.pop("out_dir", None)
    return d


def run_ensemble(cfg: ExperimentConfig, workers: int = 1) -> EnsembleReport:
    """Simulate ``cfg.n_paths`` paths; path ``i`` uses ``path_seed(base_seed, i)``."""
    t0 = time.perf_counter()
    parts = _map_blocks(_simulate_block, cfg, _blocks(cfg.n_paths, cfg.block_size), workers)
    cat = {k: (None if parts[0][k] is None else np.concatenate([q[k] for q in parts]))
           for k in parts[0]}
    wall = time.perf_counter() - t0
    term = cat["terminal"]
    underflow = cat["log_terminal"] < math.log(TINY)
    term = np.where(underflow, TINY, term)
    lyap = cat["lyapunov"]
    q = np.percentile(term, QUANTILES)
    crossings = None
    if cat["crossings"] is not None:
        band = _band(cfg, persistence_level(cfg))
        c = cat["crossings"]
        crossings = {"band": [_f(band[0]), _f(band[1])], "median": _f(np.median(c)),
                     "mean": _f(np.mean(c)), "min": int(c.min()), "counts": [int(v) for v in c]}
    bracket = None
    if cat["bracket"] is not None:
        bracket = {"xi": _f(persistence_level(cfg)), "window_fraction": cfg.window_fraction,
                   "fraction": _f(np.mean(cat["bracket"]))}
    return EnsembleReport(
        config=_report_config(cfg),
        n_paths=cfg.n_paths,
        terminal=[_f(v) for v in term],
        underflow=[bool(v) for v in underflow],
        mean=_f(term.mean()),
        sd=_f(term.std()),
        quantiles={str(k): _f(v) for k, v in zip(QUANTILES, q)},
        lyapunov={"mean": _f(lyap.mean()), "sd": _f(lyap.std()),
                  "q95": _f(np.percentile(lyap, 95)), "max": _f(lyap.max()),
                  "values": [_f(v) for v in lyap]},
        clamp_total=int(cat["clamps"].sum()),
        fixed_total=int(cat["fixed"].sum()),
        crossings=crossings,
        bracket=bracket,
        timing={"wall_clock_s": wall, "paths_per_s": cfg.n_paths / wall if wall > 0 else None},
    )


@dataclass
class ConvergenceTable:
    """Rows of (mesh, median error, interquartile range, observed order)."""

    label: str
    mesh: list
    median: list
    iqr: list
    order: list
    errors: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.mesh, self.mesh[1:])):
            raise ValueError("meshes must be strictly decreasing")

    @classmethod
    def from_errors(cls, label: str, mesh, errors) -> "ConvergenceTable":
        e = np.asarray(errors)  # (n_paths, n_levels)
        med = np.median(e, axis=0)
        q75, q25 = np.percentile(e, [75, 25], axis=0)
        order = [None]
        for k in range(1, len(mesh)):
            if med[k] > 0 and med[k - 1] > 0:
                order.append(_f(math.log(med[k - 1] / med[k]) / math.log(mesh[k - 1] / mesh[k])))
            else:
                order.append(None)
        return cls(label, [_f(h) for h in mesh], [_f(v) for v in med],
                   [_f(v) for v in q75 - q25], order, e.tolist())

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "convergence", "label": self.label,
                "mesh": self.mesh, "median": self.median, "iqr": self.iqr, "order": self.order}

    def rows(self):
        return list(zip(self.mesh, self.median, self.iqr, self.order))


def _ladder(cfg: ExperimentConfig, i: int):
    """Bridge-refined ladder for path ``i``: the ``refinement_levels + 1``
    study levels and the reference path ``reference_levels`` finer still."""
    path = sample_path(TimeGrid(cfg.t_end, cfg.cells), path_seed(cfg.base_seed, i))
    levels = [path]
    for _ in range(cfg.refinement_levels):
        levels.append(refine_bridge(levels[-1]))
    ref = levels[-1]
    for _ in range(cfg.reference_levels):
        ref = refine_bridge(ref)
    return levels, ref


def _states_from_J(p, J):
    return from_log_odds(J, p.N, p.i0)[0]


def _wz_block(cfg: ExperimentConfig, idx):
    p = cfg.params
    rows = []
    for i in idx:
        levels, ref = _ladder(cfg, i)
        ref_states = _states_from_J(p, stratonovich_log_odds(p, ref.values, ref.grid.dt))
        row = []
        for lv in levels:
            s = _states_from_J(p, wong_zakai_log_odds(p, lv.values, lv.grid.dt))
            r = ref_states[:: ref.grid.n_cells // lv.grid.n_cells]
            row.append(float(np.max(np.abs(s - r))))
        rows.append(row)
    return rows


def wz_convergence_study(cfg: ExperimentConfig, workers: int = 1) -> ConvergenceTable:
    """Sup-over-knots distance between the polygonal-noise solution at each
    bridge-refinement level and the explicit Stratonovich solution on the
    reference grid of the same Brownian path."""
    if cfg.refinement_levels < 2:
        raise ValueError("the convergence study needs refinement_levels >= 2")
    parts = _map_blocks(_wz_block, cfg, _blocks(cfg.n_paths, cfg.block_size), workers)
    errors = [r for part in parts for r in part]
    mesh = [cfg.t_end / (cfg.cells * 2**k) for k in range(cfg.refinement_levels + 1)]
    return ConvergenceTable.from_errors("wong_zakai_vs_stratonovich", mesh, errors)


def _cross_block(cfg: ExperimentConfig, idx):
    p = cfg.params
    ladders = [_ladder(cfg, i) for i in idx]
    ref_T = np.array([_states_from_J(p, stratonovich_log_odds(p, r.values, r.grid.dt))[-1]
                      for _, r in ladders])
    a, b = [], []
    for k in range(cfg.refinement_levels + 1):
        vals = np.stack([lv[k].values for lv, _ in ladders], axis=1)
        dt = ladders[0][0][k].grid.dt
        xc, _ = em_kernel(p, vals, dt, "ito_corrected", cfg.clamp_epsilon)
        xg, _ = em_kernel(p, vals, dt, "ito_gray", cfg.clamp_epsilon)
        a.append(np.abs(xc[-1] - ref_T))
        b.append(np.abs(xg[-1] - ref_T))
    return np.array(a).T.tolist(), np.array(b).T.tolist()


def scheme_cross_check(cfg: ExperimentConfig, workers: int = 1):
    """Strong error at ``t_end`` against the explicit Stratonovich solution on
    shared bridge-refined paths, for Euler-Maruyama on (a) the corrected
    drift and (b) the original Ito drift. Returns ``(table_a, table_b)``."""
    parts = _map_blocks(_cross_block, cfg, _blocks(cfg.n_paths, cfg.block_size), workers)
    ea = [r for part in parts for r in part[0]]
    eb = [r for part in parts for r in part[1]]
    mesh = [cfg.t_end / (cfg.cells * 2**k) for k in range(cfg.refinement_levels + 1)]
    return (ConvergenceTable.from_errors("em_ito_corrected", mesh, ea),
            ConvergenceTable.from_errors("em_ito_gray", mesh, eb))
