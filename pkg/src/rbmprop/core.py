"""Exact enumeration engine for small binary restricted Boltzmann machines.

State indexing
--------------
A joint state ``x = (v_1..v_nV, h_1..h_nH)`` maps to the integer whose bit
``k`` is set when node ``k`` takes the high value, with ``v_1`` as bit 0,
visibles before hiddens.  The joint table therefore reshapes to
``(2**n_hidden, 2**n_visible)`` with the visible index varying fastest.

Statistic vectors use the order ``(v_1..v_nV, h_1..h_nH, v_1 h_1, v_1 h_2, ...,
v_nV h_nH)``, i.e. interactions row-major by ``(i, j)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit, logsumexp

DEFAULT_MAX_NODES = 20


class EnumerationCapError(ValueError):
    """Raised when a model is too large to enumerate."""


class ShapeMismatchError(ValueError):
    """Raised when parameters, states or data disagree on the model shape."""


class Coding(enum.Enum):
    ZERO_ONE = "01"
    PLUS_MINUS_ONE = "pm1"

    @property
    def low(self) -> int:
        return 0 if self is Coding.ZERO_ONE else -1

    @property
    def high(self) -> int:
        return 1

    @property
    def values(self) -> tuple[int, int]:
        return (self.low, self.high)

    @classmethod
    def parse(cls, text: str | "Coding") -> "Coding":
        if isinstance(text, Coding):
            return text
        key = str(text).strip().lower()
        aliases = {
            "01": cls.ZERO_ONE, "0/1": cls.ZERO_ONE, "zeroone": cls.ZERO_ONE,
            "pm1": cls.PLUS_MINUS_ONE, "-1/1": cls.PLUS_MINUS_ONE,
            "plusminusone": cls.PLUS_MINUS_ONE, "+-1": cls.PLUS_MINUS_ONE,
        }
        if key not in aliases:
            raise ValueError(f"unknown coding {text!r}; use '01' or 'pm1'")
        return aliases[key]


@dataclass(frozen=True)
class ModelShape:
    n_visible: int
    n_hidden: int
    coding: Coding = Coding.PLUS_MINUS_ONE
    max_nodes: int = field(default=DEFAULT_MAX_NODES, compare=False)

    def __post_init__(self):
        if int(self.n_visible) < 1 or int(self.n_hidden) < 1:
            raise ValueError("n_visible and n_hidden must both be >= 1")
        object.__setattr__(self, "coding", Coding.parse(self.coding))
        if self.n_visible + self.n_hidden > self.max_nodes:
            raise EnumerationCapError(
                f"{self.n_visible}+{self.n_hidden} nodes exceeds the "
                f"enumeration cap of {self.max_nodes}")

    @property
    def n_nodes(self) -> int:
        return self.n_visible + self.n_hidden

    @property
    def n_main(self) -> int:
        return self.n_visible + self.n_hidden

    @property
    def n_interaction(self) -> int:
        return self.n_visible * self.n_hidden

    @property
    def dim(self) -> int:
        """Number of parameters m."""
        return self.n_main + self.n_interaction

    @property
    def n_visible_cells(self) -> int:
        return 1 << self.n_visible

    @property
    def n_states(self) -> int:
        return 1 << self.n_nodes

    def __str__(self):
        return f"{self.n_visible}x{self.n_hidden}/{self.coding.value}"


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ThetaVector:
    """RBM parameters: visible mains, hidden mains and the interaction matrix."""

    shape: ModelShape
    visible_main: np.ndarray
    hidden_main: np.ndarray
    interaction: np.ndarray

    def __post_init__(self):
        vm = _readonly(self.visible_main).reshape(-1)
        hm = _readonly(self.hidden_main).reshape(-1)
        w = _readonly(self.interaction)
        s = self.shape
        if vm.shape != (s.n_visible,) or hm.shape != (s.n_hidden,):
            raise ShapeMismatchError(
                f"main effects have lengths {vm.size},{hm.size}; shape {s} "
                f"needs {s.n_visible},{s.n_hidden}")
        if w.shape != (s.n_visible, s.n_hidden):
            raise ShapeMismatchError(
                f"interaction matrix is {w.shape}, expected "
                f"{(s.n_visible, s.n_hidden)}")
        if not (np.all(np.isfinite(vm)) and np.all(np.isfinite(hm))
                and np.all(np.isfinite(w))):
            raise ValueError("theta entries must be finite")
        for name, val in (("visible_main", vm), ("hidden_main", hm),
                          ("interaction", w)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def zeros(cls, shape: ModelShape) -> "ThetaVector":
        return cls.from_flat(shape, np.zeros(shape.dim))

    @classmethod
    def from_flat(cls, shape: ModelShape, vec) -> "ThetaVector":
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if vec.size != shape.dim:
            raise ShapeMismatchError(
                f"theta has {vec.size} entries, shape {shape} needs {shape.dim}")
        nv, nh = shape.n_visible, shape.n_hidden
        return cls(shape, vec[:nv], vec[nv:nv + nh],
                   vec[nv + nh:].reshape(nv, nh))

    @property
    def flat(self) -> np.ndarray:
        out = np.concatenate([self.visible_main, self.hidden_main,
                              self.interaction.reshape(-1)])
        out.setflags(write=False)
        return out

    @property
    def main(self) -> np.ndarray:
        return np.concatenate([self.visible_main, self.hidden_main])

    def with_interaction(self, interaction) -> "ThetaVector":
        return ThetaVector(self.shape, self.visible_main, self.hidden_main,
                           interaction)

    def scaled(self, s: float) -> "ThetaVector":
        return ThetaVector.from_flat(self.shape, s * self.flat)

    def __eq__(self, other):
        if not isinstance(other, ThetaVector):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.flat, other.flat)

    def __hash__(self):
        return hash((self.shape, self.flat.tobytes()))

    def __repr__(self):
        return f"ThetaVector({self.shape}, {np.array2string(self.flat, precision=4)})"


@dataclass(frozen=True, eq=False)
class NodeState:
    shape: ModelShape
    visibles: np.ndarray
    hiddens: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.visibles, dtype=int).reshape(-1)
        h = np.asarray(self.hiddens, dtype=int).reshape(-1)
        if v.size != self.shape.n_visible or h.size != self.shape.n_hidden:
            raise ShapeMismatchError("state length does not match shape")
        allowed = self.shape.coding.values
        if not (np.isin(v, allowed).all() and np.isin(h, allowed).all()):
            raise ValueError(f"state entries must lie in {allowed}")
        v.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "visibles", v)
        object.__setattr__(self, "hiddens", h)


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    shape: ModelShape
    joint: np.ndarray
    visible_marginal: np.ndarray
    log_gamma: float
    log_joint: np.ndarray
    log_visible_marginal: np.ndarray

    @property
    def joint_table(self) -> np.ndarray:
        """Joint probabilities as a ``(2**n_hidden, 2**n_visible)`` table."""
        return self.joint.reshape(1 << self.shape.n_hidden,
                                  self.shape.n_visible_cells)


@dataclass(frozen=True, eq=False)
class Dataset:
    shape: ModelShape
    observations: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=int)
        if obs.ndim != 2 or obs.shape[1] != self.shape.n_visible:
            raise ShapeMismatchError(
                f"observations must be n x {self.shape.n_visible}")
        if not np.isin(obs, self.shape.coding.values).all():
            raise ValueError(
                f"observations must be coded in {self.shape.coding.values}")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def cell_index(self) -> np.ndarray:
        bits = (self.observations == self.shape.coding.high).astype(np.int64)
        return bits @ (1 << np.arange(self.shape.n_visible, dtype=np.int64))

    @property
    def cell_counts(self) -> np.ndarray:
        return np.bincount(self.cell_index,
                           minlength=self.shape.n_visible_cells)

    @property
    def empirical_cells(self) -> np.ndarray:
        return self.cell_counts / self.n


# -- enumeration tables -------------------------------------------------------

@lru_cache(maxsize=64)
def _layer_states(n: int, coding: Coding) -> np.ndarray:
    """All 2**n codings of an n-node layer, row k = binary expansion of k."""
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    out = np.where(bits == 1, coding.high, coding.low).astype(float)
    out.setflags(write=False)
    return out


def visible_states(shape: ModelShape) -> np.ndarray:
    """Coded visible configurations, row index = visible cell index."""
    return _layer_states(shape.n_visible, shape.coding)


def hidden_states(shape: ModelShape) -> np.ndarray:
    return _layer_states(shape.n_hidden, shape.coding)


@lru_cache(maxsize=32)
def _stat_table(shape: ModelShape) -> np.ndarray:
    vs, hs = visible_states(shape), hidden_states(shape)
    nv, nh = shape.n_visible, shape.n_hidden
    # joint index = v_idx + 2**nv * h_idx
    v = np.tile(vs, (1 << nh, 1))
    h = np.repeat(hs, 1 << nv, axis=0)
    inter = (v[:, :, None] * h[:, None, :]).reshape(-1, nv * nh)
    out = np.hstack([v, h, inter])
    out.setflags(write=False)
    return out


def statistic_table(shape: ModelShape) -> np.ndarray:
    """Every t(x) as a ``(2**(nV+nH), m)`` array in state-index order."""
    return _stat_table(shape)


def state_from_index(shape: ModelShape, index: int) -> NodeState:
    if not 0 <= index < shape.n_states:
        raise ValueError("state index out of range")
    nv = shape.n_visible
    return NodeState(shape,
                     visible_states(shape)[index & ((1 << nv) - 1)],
                     hidden_states(shape)[index >> nv])


def _check_shape(theta: ThetaVector, shape: ModelShape):
    if theta.shape != shape:
        raise ShapeMismatchError(f"theta is for {theta.shape}, got {shape}")


# -- operations ---------------------------------------------------------------

def neg_potential(theta: ThetaVector, state: NodeState) -> float:
    _check_shape(theta, state.shape)
    v, h = state.visibles, state.hiddens
    return float(v @ theta.interaction @ h + theta.visible_main @ v
                 + theta.hidden_main @ h)


def _log_potential_table(theta: ThetaVector) -> np.ndarray:
    """Q(x) laid out as ``(2**nH, 2**nV)``."""
    vs, hs = visible_states(theta.shape), hidden_states(theta.shape)
    return ((hs @ theta.hidden_main)[:, None] + (vs @ theta.visible_main)[None, :]
            + hs @ (theta.interaction.T @ vs.T))


def partition_log(theta: ThetaVector) -> float:
    """log of the normalising function, by log-sum-exp over every state."""
    return float(logsumexp(_log_potential_table(theta)))


def exact_distribution(theta: ThetaVector) -> ExactDistribution:
    q = _log_potential_table(theta)
    # weights relative to the largest term cannot overflow; dividing by their
    # sum (rather than exponentiating q - log_gamma) keeps ties exact
    top = q.max()
    w = np.exp(q - top)
    z = w.sum()
    log_gamma = float(top + np.log(z))
    log_joint = q - log_gamma
    log_marg = logsumexp(log_joint, axis=0)
    return ExactDistribution(
        shape=theta.shape,
        joint=_readonly((w / z).reshape(-1)),
        visible_marginal=_readonly(w.sum(axis=0) / z),
        log_gamma=log_gamma,
        log_joint=_readonly(log_joint.reshape(-1)),
        log_visible_marginal=_readonly(log_marg),
    )


def log_visible_marginal(theta: ThetaVector) -> np.ndarray:
    """Log probabilities of every visible cell, hiddens summed out."""
    q = _log_potential_table(theta)
    return logsumexp(q, axis=0) - logsumexp(q)


def sufficient_statistic(state: NodeState) -> np.ndarray:
    v, h = state.visibles.astype(float), state.hiddens.astype(float)
    return np.concatenate([v, h, np.outer(v, h).reshape(-1)])


def mean_statistic(theta: ThetaVector, dist: ExactDistribution | None = None
                   ) -> np.ndarray:
    """Exact E_theta t(X) in canonical order."""
    if dist is None:
        dist = exact_distribution(theta)
    s = theta.shape
    table = dist.joint_table
    vs, hs = visible_states(s), hidden_states(s)
    ev = table.sum(axis=0) @ vs
    eh = table.sum(axis=1) @ hs
    evh = vs.T @ table.T @ hs
    return np.clip(np.concatenate([ev, eh, evh.reshape(-1)]),
                   s.coding.low, s.coding.high)


def _high_prob(field_, coding: Coding) -> np.ndarray:
    # P(high) = e^{a c_hi} / (e^{a c_hi} + e^{a c_lo}) = sigmoid(a (c_hi - c_lo))
    return expit(field_ * (coding.high - coding.low))


def hidden_conditional(theta: ThetaVector, visibles) -> np.ndarray:
    """P(H_j = high | v) for each hidden; rows broadcast over 2-D input."""
    v = np.asarray(visibles, dtype=float)
    if v.shape[-1] != theta.shape.n_visible:
        raise ShapeMismatchError("visible vector length does not match shape")
    return _high_prob(theta.hidden_main + v @ theta.interaction,
                      theta.shape.coding)


def visible_conditional(theta: ThetaVector, hiddens) -> np.ndarray:
    h = np.asarray(hiddens, dtype=float)
    if h.shape[-1] != theta.shape.n_hidden:
        raise ShapeMismatchError("hidden vector length does not match shape")
    return _high_prob(theta.visible_main + h @ theta.interaction.T,
                      theta.shape.coding)


def sample_visibles_exact(theta: ThetaVector, n: int, seed) -> Dataset:
    """Draw ``n`` visible vectors from the exact marginal by inverse CDF."""
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(exact_distribution(theta).visible_marginal)
    idx = np.searchsorted(cdf, rng.random(int(n)) * cdf[-1], side="right")
    idx = np.minimum(idx, theta.shape.n_visible_cells - 1)
    return Dataset(theta.shape, visible_states(theta.shape)[idx].astype(int))
