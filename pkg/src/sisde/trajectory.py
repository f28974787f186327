"""Time-indexed state sequences with provenance and boundary diagnostics."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .noise import TimeGrid
from .params import SisParams

__all__ = ["Provenance", "BoundaryDiag", "Trajectory", "params_hash", "from_log_odds"]

TINY = np.finfo(np.float64).tiny


def params_hash(p: SisParams) -> str:
    blob = json.dumps(p.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Provenance:
    method: str
    params_hash: str
    seed: Optional[int]
    mesh: float
    substeps: Optional[int] = None

    def header(self) -> str:
        return "# provenance: " + json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class BoundaryDiag:
    """``clamp_count``: steps pushed back into [eps N, (1-eps) N].
    ``underflow_count``: knots whose state is not representable strictly
    inside ]0, N[ in double precision and was stored as the nearest
    representable interior value. ``cap_count``: log-odds values capped."""

    min_state: float
    max_state: float
    clamp_count: int = 0
    underflow_count: int = 0
    cap_count: int = 0


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray = field(repr=False)
    provenance: Provenance
    diag: BoundaryDiag
    log_states: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.states) != self.grid.n_cells + 1:
            raise ValueError("states must have length n_cells + 1")

    @property
    def times(self) -> np.ndarray:
        return self.grid.knots

    @property
    def terminal(self) -> float:
        return float(self.states[-1])

    def log(self) -> np.ndarray:
        """ln of the states; uses the stored log-domain values when present."""
        if self.log_states is not None:
            return self.log_states
        return np.log(self.states)

    def to_csv(self, fh) -> None:
        fh.write(self.provenance.header() + "\n")
        fh.write("t,value\n")
        for t, x in zip(self.times.tolist(), self.states.tolist()):
            fh.write(f"{t!r},{x!r}\n")


def from_log_odds(J: np.ndarray, N: float, i0: float):
    """Map log-odds ``J = ln(I/(N-I))`` to states in ]0, N[.

    Returns ``(states, log_states, n_fixed)``; ``n_fixed`` counts knots where
    N*expit(J) rounded to 0 or N and was replaced by the nearest interior
    double. ``states[0]`` is set to ``i0`` exactly.
    """
    states = N * expit(J)
    log_states = np.log(N) - np.logaddexp(0.0, -J)
    low = states <= 0
    high = states >= N
    states = np.where(low, TINY, states)
    states = np.where(high, np.nextafter(N, 0.0), states)
    states[0] = i0
    log_states[0] = np.log(i0)
    return states, log_states, int(np.count_nonzero(low) + np.count_nonzero(high))


def make_diag(states: np.ndarray, **counts) -> BoundaryDiag:
    return BoundaryDiag(float(np.min(states)), float(np.max(states)), **counts)
