"""Two-dimensional CTMC over (i, j) = (PU packets, SU packets) in the system.

Transitions out of (i, j):

* (i, j+1) at lambda_su                           SU arrival
* (i+1, j) at lambda_pu                           PU arrival
* (i, j-1) at mu_su * min(j, max(N - i, 0))       SU departure
* (i-1, j) at mu_pu * min(i, N)                   PU departure

The infinite lattice is truncated to [0, i_max] x [0, j_max] by dropping arrival
transitions that would leave it, which keeps the truncated generator a proper
CTMC. The mass sitting on the outer row/column is reported as the truncation
quality.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, TruncationCapError, UndefinedDelayError
from .ioutil import CSV_VERSION_LINE, atomic_write_text
from .model import NetworkModel

DEFAULT_TAIL_TOLERANCE = 1e-10
DEFAULT_RESIDUAL_TOLERANCE = 1e-10
DEFAULT_CAP = 16384
MAX_REFINEMENT_STEPS = 20


@dataclass(frozen=True)
class TruncationSpec:
    i_max: int
    j_max: int
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        if self.i_max < 1 or self.j_max < 1:
            raise ValueError("truncation bounds must be >= 1")
        if not 0 < self.tail_tolerance <= 1e-3:
            raise ValueError("tail_tolerance must lie in (0, 1e-3]")

    def validate_for(self, model: NetworkModel):
        if self.i_max < model.n_servers or self.j_max < model.n_servers:
            raise ValueError(f"truncation bounds must be >= n_servers={model.n_servers}")

    @property
    def n_states(self) -> int:
        return (self.i_max + 1) * (self.j_max + 1)

    def to_dict(self) -> dict:
        return {"i_max": self.i_max, "j_max": self.j_max, "tail_tolerance": self.tail_tolerance}


def transition_rates(state, model: NetworkModel) -> list[tuple[tuple[int, int], float]]:
    """Outgoing transitions of ``state`` on the untruncated lattice."""
    i, j = state
    if i < 0 or j < 0:
        raise ValueError("state coordinates must be non-negative")
    n = model.n_servers
    out = [
        ((i, j + 1), model.su.lam),
        ((i + 1, j), model.pu.lam),
        ((i, j - 1), model.su.mu * min(j, max(n - i, 0))),
        ((i - 1, j), model.pu.mu * min(i, n)),
    ]
    return [(s, r) for s, r in out if r > 0 and s[0] >= 0 and s[1] >= 0]


def _state_grid(trunc):
    i, j = np.meshgrid(np.arange(trunc.i_max + 1), np.arange(trunc.j_max + 1), indexing="ij")
    return i.ravel(), j.ravel()


def generator(model: NetworkModel, trunc: TruncationSpec, order: str = "ij") -> sp.csr_matrix:
    """Truncated generator Q (rows sum to zero).

    ``order="ij"`` indexes states row-major by i then j (the serialization order);
    ``order="ji"`` makes j the slow index, which keeps Q banded with bandwidth
    i_max + 1 and is what the solver uses.
    """
    I, J = trunc.i_max, trunc.j_max
    if order == "ij":
        index = lambda a, b: a * (J + 1) + b
    elif order == "ji":
        index = lambda a, b: b * (I + 1) + a
    else:
        raise ValueError(f"unknown order {order!r}")
    n = model.n_servers
    i, j = _state_grid(trunc)
    rows, cols, vals = [], [], []

    def add(mask, ti, tj, rate):
        rate = np.broadcast_to(rate, mask.shape)[mask]
        rows.append(index(i[mask], j[mask]))
        cols.append(index(ti[mask], tj[mask]))
        vals.append(rate.astype(float))

    if model.su.lam > 0:
        add(j < J, i, j + 1, model.su.lam)
    if model.pu.lam > 0:
        add(i < I, i + 1, j, model.pu.lam)
    su_rate = model.su.mu * np.minimum(j, np.maximum(n - i, 0))
    add(su_rate > 0, i, j - 1, su_rate)
    pu_rate = model.pu.mu * np.minimum(i, n)
    add(pu_rate > 0, i - 1, j, pu_rate)

    size = trunc.n_states
    q = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(size, size))
    return (q - sp.diags(np.asarray(q.sum(axis=1)).ravel())).tocsr()


def balance_residual(pi_flat: np.ndarray, q: sp.spmatrix) -> np.ndarray:
    """State-wise global-balance residual (inflow - outflow), i.e. pi @ Q."""
    return q.T @ pi_flat


@dataclass(frozen=True)
class JointPmf:
    """Stationary law of (i, j) on a truncated lattice; ``probabilities[i, j]``."""

    probabilities: np.ndarray
    truncation: TruncationSpec
    achieved_tail_mass: float
    model: NetworkModel
    residual: float = 0.0

    @property
    def total(self) -> float:
        return float(self.probabilities.sum())

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return marginals(self)

    @property
    def mean_pu(self) -> float:
        pu, _ = marginals(self)
        return float(np.dot(np.arange(pu.size), pu))

    @property
    def mean_su(self) -> float:
        _, su = marginals(self)
        return float(np.dot(np.arange(su.size), su))

    def to_csv(self, path) -> None:
        p = self.probabilities
        lines = [CSV_VERSION_LINE, "i,j,p"]
        for i in range(p.shape[0]):
            row = p[i]
            lines.extend(f"{i},{j},{v!r}" for j, v in enumerate(row.tolist()))
        atomic_write_text(path, "\n".join(lines) + "\n")

    @staticmethod
    def read_csv(path) -> np.ndarray:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
        if rows[0] != ["i", "j", "p"]:
            raise ValueError(f"unexpected header {rows[0]!r}")
        data = np.array(rows[1:], dtype=float)
        i, j = data[:, 0].astype(int), data[:, 1].astype(int)
        out = np.zeros((i.max() + 1, j.max() + 1))
        out[i, j] = data[:, 2]
        return out

    def to_dict(self, include_joint: bool = False) -> dict:
        pu, su = marginals(self)
        d = {
            "model": self.model.to_dict(),
            "truncation": self.truncation.to_dict(),
            "achieved_tail_mass": self.achieved_tail_mass,
            "residual": self.residual,
            "total_mass": self.total,
            "mean_pu": self.mean_pu,
            "mean_su": self.mean_su,
            "pu_marginal": pu.tolist(),
            "su_marginal": su.tolist(),
        }
        if include_joint:
            d["joint"] = self.probabilities.tolist()
        return d

    def to_json(self, path, include_joint: bool = False) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(include_joint), indent=2))


def boundary_mass(p: np.ndarray) -> float:
    """Mass on the outer row i=i_max and outer column j=j_max."""
    return float(p[-1, :].sum() + p[:-1, -1].sum())


def stationary_distribution(model: NetworkModel, trunc: TruncationSpec,
                            residual_tolerance: float = DEFAULT_RESIDUAL_TOLERANCE) -> JointPmf:
    """Solve pi Q = 0, sum(pi) = 1 on the truncated lattice.

    The j-major ordering makes Q^T banded, so a sparse LU in natural column order
    has fill bounded by the band and runs in time linear in j_max. pi(0, 0) is
    pinned to 1 to remove the rank deficiency and the result renormalized; a few
    steps of iterative refinement follow if the residual is above tolerance.

    The residual is the max-norm of pi Q divided by the largest exit rate, so
    the tolerance does not depend on the time unit.
    """
    model.require_stable()
    trunc.validate_for(model)
    q = generator(model, trunc, order="ji")
    scale = float(-q.diagonal().min()) or 1.0
    a = (q.T / scale).tocsc()
    sub = a[1:, 1:].tocsc()
    rhs = -a[1:, 0].toarray().ravel()
    if sub.shape[0] == 0:
        x = np.zeros(0)
    else:
        lu = splu(sub, permc_spec="NATURAL")
        x = lu.solve(rhs)
    pi = np.concatenate([[1.0], x])
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    res = float(np.abs(a @ pi).max())
    steps = 0
    while res > residual_tolerance and steps < MAX_REFINEMENT_STEPS and sub.shape[0]:
        # refine the unnormalized solve against its own residual
        y = pi[1:] / pi[0]
        dy = lu.solve(rhs - sub @ y)
        pi = np.concatenate([[1.0], y + dy])
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        res = float(np.abs(a @ pi).max())
        steps += 1
    if not res <= residual_tolerance:
        raise ConvergenceError(res, residual_tolerance)
    joint = pi.reshape(trunc.j_max + 1, trunc.i_max + 1).T.copy()
    return JointPmf(joint, trunc, boundary_mass(joint), model, res)


def _search(model, tail_tolerance, cap, residual_tolerance=DEFAULT_RESIDUAL_TOLERANCE):
    model.require_stable()
    n = model.n_servers
    i_max = j_max = n
    while True:
        trunc = TruncationSpec(i_max, j_max, tail_tolerance)
        pmf = stationary_distribution(model, trunc, residual_tolerance)
        p = pmf.probabilities
        row, col = float(p[-1, :].sum()), float(p[:, -1].sum())
        if row + col < tail_tolerance:
            return trunc, pmf
        grow_i = row >= tail_tolerance / 2
        grow_j = col >= tail_tolerance / 2
        if (grow_i and i_max >= cap) or (grow_j and j_max >= cap):
            raise TruncationCapError(pmf.achieved_tail_mass, i_max, j_max, cap)
        if grow_i:
            i_max = min(2 * i_max, cap)
        if grow_j:
            j_max = min(2 * j_max, cap)


def choose_truncation(model: NetworkModel, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
                      cap: int = DEFAULT_CAP) -> TruncationSpec:
    """Double (i_max, j_max) from (N, N) until the boundary mass drops below tolerance."""
    return _search(model, tail_tolerance, cap)[0]


def solve(model: NetworkModel, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
          cap: int = DEFAULT_CAP, trunc: TruncationSpec | None = None,
          residual_tolerance: float = DEFAULT_RESIDUAL_TOLERANCE) -> JointPmf:
    """Stationary distribution with automatically chosen (or given) truncation."""
    if trunc is not None:
        return stationary_distribution(model, trunc, residual_tolerance)
    return _search(model, tail_tolerance, cap, residual_tolerance)[1]


def marginals(pmf: JointPmf) -> tuple[np.ndarray, np.ndarray]:
    p = pmf.probabilities
    return p.sum(axis=1), p.sum(axis=0)


class Delays(NamedTuple):
    d_pu: float | None
    d_su: float | None


def delays_from_pmf(pmf: JointPmf) -> Delays:
    """Mean total delays via Little's law; ``None`` for a class with no traffic."""
    m = pmf.model
    d_pu = pmf.mean_pu / m.pu.lam if m.pu.lam > 0 else None
    d_su = pmf.mean_su / m.su.lam if m.su.lam > 0 else None
    return Delays(d_pu, d_su)


def require_delays(pmf: JointPmf) -> tuple[float, float]:
    d = delays_from_pmf(pmf)
    if d.d_pu is None or d.d_su is None:
        raise UndefinedDelayError("delay undefined at zero arrival rate")
    return d.d_pu, d.d_su


def quantile_index(pmf_1d: np.ndarray, q: float) -> int:
    """Smallest k with cumulative probability >= q."""
    cum = np.cumsum(pmf_1d) / pmf_1d.sum()
    return int(np.searchsorted(cum, q))
