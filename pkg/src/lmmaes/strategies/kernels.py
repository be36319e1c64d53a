"""Sampling and update rules of the four strategy variants.

All update functions take a generation already sorted best-first (see
:func:`rank_order`) and return a new state; the input state is not mutated.
Sampling works on whole generations: row ``i`` of ``Z`` is the ``i``-th
vector drawn from the stream, so a generation consumes the stream exactly
like ``lam`` single draws.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from ..rng import GaussianStream
from .params import HyperParameters


@dataclass(frozen=True)
class EsState:
    hyper: HyperParameters
    y: np.ndarray
    sigma: float
    p_sigma: np.ndarray
    t: int = 0

    @property
    def n(self) -> int:
        return self.hyper.n


@dataclass(frozen=True)
class LmMaEsState(EsState):
    m_vecs: Optional[np.ndarray] = None  # (m, n), row j is direction j+1


@dataclass(frozen=True)
class MaEsState(EsState):
    M: Optional[np.ndarray] = None


@dataclass(frozen=True)
class StorageVariantState(EsState):
    p_c: Optional[np.ndarray] = None
    M_rows: Optional[np.ndarray] = None  # (m_max, n) stored paths, one per slot
    ref: Optional[np.ndarray] = None  # ref[k] = slot of the (k+1)-th oldest vector
    time: Optional[np.ndarray] = None  # iteration stamp per slot
    N: Optional[np.ndarray] = None  # target spacing between neighbours, length m_max - 1
    m_cur: int = 0


@dataclass
class EvaluatedSample:
    index: int
    z: np.ndarray
    d: np.ndarray
    f: float = float("nan")


def rank_order(f) -> np.ndarray:
    """Indices sorting ``f`` ascending.

    Ties keep index order; NaN and +inf rank last, also in index order.
    """
    f = np.asarray(f, dtype=np.float64)
    key = np.where(np.isnan(f), np.inf, f)
    return np.argsort(key, kind="stable")


def _init_common(hyper: HyperParameters, y0, sigma0: float) -> dict:
    y = np.array(y0, dtype=np.float64)
    if y.shape != (hyper.n,):
        raise ValueError(f"initial mean has shape {y.shape}, expected ({hyper.n},)")
    if not sigma0 > 0:
        raise ValueError(f"initial step size must be positive, got {sigma0}")
    return dict(hyper=hyper, y=y, sigma=float(sigma0), p_sigma=np.zeros(hyper.n), t=0)


def init_state(hyper: HyperParameters, y0, sigma0: float) -> EsState:
    """Initial state for ``hyper.variant``: zero paths, empty memory, M = I."""
    common = _init_common(hyper, y0, sigma0)
    n = hyper.n
    if hyper.variant == "lmmaes":
        return LmMaEsState(**common, m_vecs=np.zeros((hyper.m, n)))
    if hyper.variant == "maes":
        return MaEsState(**common, M=np.eye(n))
    if hyper.variant == "lmmaes-storage":
        k = hyper.m_max
        return StorageVariantState(
            **common,
            p_c=np.zeros(n),
            M_rows=np.zeros((k, n)),
            ref=np.arange(k),
            time=np.zeros(k, dtype=np.int64),
            N=np.full(k - 1, n * n / k),
            m_cur=0,
        )
    return EsState(**common)


def _weighted_steps(hyper: HyperParameters, z: np.ndarray, d: np.ndarray):
    w = hyper.weights
    mu = hyper.mu
    if z.shape[0] < mu or d.shape[0] < mu:
        raise ValueError(f"need at least mu={mu} ranked samples")
    return w @ z[:mu], w @ d[:mu]


def _path(p: np.ndarray, c: float, mueff: float, zw: np.ndarray) -> np.ndarray:
    return (1.0 - c) * p + np.sqrt(mueff * c * (2.0 - c)) * zw


def csa(sigma: float, p_sigma: np.ndarray, n: int, c_sigma: float, d_sigma: float) -> float:
    """Cumulative step-size adaptation on the squared path length."""
    return float(sigma * np.exp((c_sigma / d_sigma) * (p_sigma @ p_sigma / n - 1.0)))


def _mean_path_sigma(state: EsState, z, d):
    h = state.hyper
    zw, dw = _weighted_steps(h, z, d)
    y = state.y + state.sigma * dw
    p_sigma = _path(state.p_sigma, h.c_sigma, h.mueff, zw)
    sigma = csa(state.sigma, p_sigma, h.n, h.c_sigma, h.d_sigma)
    return zw, y, p_sigma, sigma


def rank_one_chain(z: np.ndarray, V: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Apply ``d <- (1 - c_j) d + c_j v_j (v_j . d)`` for the rows of ``V`` in order.

    ``z`` is one vector or a stack of rows. The chain is evaluated in closed
    form: with ``r_j = c_j / (1 - c_j)`` the result is
    ``prod(1 - c) * (z + (u * r) @ V)`` where ``u`` solves the unit
    upper-triangular system ``u (I - triu(r G, 1)) = z V^T`` and
    ``G = V V^T``. That costs two products with ``V`` instead of ``k``
    sequential passes over the samples.
    """
    d = np.array(z, dtype=np.float64)
    k = V.shape[0]
    if k == 0:
        return d
    rates = np.asarray(rates, dtype=np.float64)
    keep = 1.0 - rates
    if np.any(np.abs(keep) < 1e-8):
        return _rank_one_loop(d, V, rates)
    r = rates / keep
    S = d @ V.T
    A = np.eye(k) - np.triu(r[:, None] * (V @ V.T), 1)
    U = solve_triangular(A.T, S.T, lower=True, unit_diagonal=True).T
    return np.prod(keep) * (d + (U * r) @ V)


def _rank_one_loop(d: np.ndarray, V: np.ndarray, rates: np.ndarray) -> np.ndarray:
    for v, c in zip(V, rates):
        s = d @ v
        d *= 1.0 - c
        d += np.multiply.outer(c * s, v)
    return d


# limited-memory MA-ES

def lmma_transform(state: LmMaEsState, z: np.ndarray) -> np.ndarray:
    """Apply the first ``min(t, m)`` direction factors to ``z``, direction 1 first."""
    k = min(state.t, state.hyper.m)
    return rank_one_chain(z, state.m_vecs[:k], state.hyper.c_d[:k])


def lmma_sample(state: LmMaEsState, stream: GaussianStream, index: int = 0) -> EvaluatedSample:
    z = stream.next_normal_vector(state.n)
    return EvaluatedSample(index, z, lmma_transform(state, z))


def lmma_sample_population(state: LmMaEsState, stream: GaussianStream):
    z = stream.next_normal_matrix(state.hyper.lam, state.n)
    return z, lmma_transform(state, z)


def lmma_update(state: LmMaEsState, z: np.ndarray, d: np.ndarray) -> LmMaEsState:
    """Mean, path, direction-vector and step-size update from a ranked generation."""
    h = state.hyper
    zw, y, p_sigma, sigma = _mean_path_sigma(state, z, d)
    c = h.c_c[:, None]
    m_vecs = (1.0 - c) * state.m_vecs + np.sqrt(h.mueff * c * (2.0 - c)) * zw
    return replace(state, y=y, sigma=sigma, p_sigma=p_sigma, m_vecs=m_vecs, t=state.t + 1)


# sigma-only ES

def sigma_sample_population(state: EsState, stream: GaussianStream):
    z = stream.next_normal_matrix(state.hyper.lam, state.n)
    return z, z


def sigma_only_update(state: EsState, z: np.ndarray, d: np.ndarray) -> EsState:
    _, y, p_sigma, sigma = _mean_path_sigma(state, z, d)
    return replace(state, y=y, sigma=sigma, p_sigma=p_sigma, t=state.t + 1)


# fast MA-ES

def maes_sample(state: MaEsState, stream: GaussianStream, index: int = 0) -> EvaluatedSample:
    z = stream.next_normal_vector(state.n)
    return EvaluatedSample(index, z, state.M @ z)


def maes_sample_population(state: MaEsState, stream: GaussianStream):
    z = stream.next_normal_matrix(state.hyper.lam, state.n)
    return z, z @ state.M.T


def maes_update_fast(state: MaEsState, z: np.ndarray, d: np.ndarray) -> MaEsState:
    """Additive O(n^2) form of the multiplicative transformation-matrix update.

    ``d`` must be ``M z`` for the current ``M``. The rank-one term uses the
    freshly updated path unless ``hyper.path_version == "old"``.
    """
    h = state.hyper
    _, y, p_sigma, sigma = _mean_path_sigma(state, z, d)
    p = p_sigma if h.path_version == "new" else state.p_sigma
    mu = h.mu
    d_sigma = state.M @ p
    M = (1.0 - 0.5 * h.c1 - 0.5 * h.cmu) * state.M
    M += np.outer((0.5 * h.c1) * d_sigma, p)
    M += ((0.5 * h.cmu) * h.weights[:, None] * d[:mu]).T @ z[:mu]
    return replace(state, y=y, sigma=sigma, p_sigma=p_sigma, M=M, t=state.t + 1)


# storage variant

def storage_rates(state: StorageVariantState) -> np.ndarray:
    """Per-position rates: ``c1`` scaled by the spacing to the next newer vector.

    Position ``j`` refers to the ``j``-th oldest stored vector; the newest
    one uses ``c1`` unscaled.
    """
    h = state.hyper
    k = state.m_cur
    rates = np.full(k, h.c1)
    if k > 1:
        stamps = state.time[state.ref[:k]]
        rates[:-1] = h.c1 * np.diff(stamps) / state.N[: k - 1]
    return rates


def storage_transform(state: StorageVariantState, z: np.ndarray) -> np.ndarray:
    """Apply the stored paths newest first."""
    k = state.m_cur
    order = state.ref[:k][::-1]
    return rank_one_chain(z, state.M_rows[order], storage_rates(state)[::-1])


def storage_sample_population(state: StorageVariantState, stream: GaussianStream):
    z = stream.next_normal_matrix(state.hyper.lam, state.n)
    return z, storage_transform(state, z)


def select_slot(ref: np.ndarray, time: np.ndarray, N: np.ndarray, m_cur: int, t: int) -> tuple[np.ndarray, int]:
    """Choose the slot receiving the path of iteration ``t + 1``.

    Returns the reordered reference array and the new stored count. While
    the memory is filling the next free slot is used. Once full, the vector
    closest to its older neighbour (relative to the target spacing) is
    dropped, or the oldest one when every spacing already meets its target;
    its slot moves to the newest position.
    """
    ref = ref.copy()
    m_max = ref.size
    m_new = min(t + 1, m_max)
    if t < m_max:
        ref[m_new - 1] = t
        return ref, m_new
    i_min = 0
    if m_new >= 2:
        gaps = time[ref[1:m_new]] - time[ref[: m_new - 1]] - N[: m_new - 1]
        k = int(np.argmin(gaps))
        i_min = 0 if gaps[k] >= 0 else k + 1
    slot = ref[i_min]
    ref[i_min:m_new - 1] = ref[i_min + 1:m_new]
    ref[m_new - 1] = slot
    return ref, m_new


def storage_update(state: StorageVariantState, z: np.ndarray, d: np.ndarray) -> StorageVariantState:
    h = state.hyper
    zw, y, p_sigma, sigma = _mean_path_sigma(state, z, d)
    p_c = _path(state.p_c, h.cc, h.mueff, zw)
    ref, m_new = select_slot(state.ref, state.time, state.N, state.m_cur, state.t)
    slot = ref[m_new - 1]
    time = state.time.copy()
    time[slot] = state.t + 1
    M_rows = state.M_rows.copy()
    M_rows[slot] = p_c
    return replace(
        state, y=y, sigma=sigma, p_sigma=p_sigma, p_c=p_c,
        M_rows=M_rows, ref=ref, time=time, m_cur=m_new, t=state.t + 1,
    )


def storage_variant_step(state: StorageVariantState, stream: GaussianStream, objective) -> StorageVariantState:
    """One full iteration: sample, evaluate, rank, update."""
    z, d = storage_sample_population(state, stream)
    f = objective.evaluate_many(state.y + state.sigma * d)
    order = rank_order(f)
    return storage_update(state, z[order], d[order])


SAMPLERS = {
    "lmmaes": lmma_sample_population,
    "maes": maes_sample_population,
    "sigma-es": sigma_sample_population,
    "lmmaes-storage": storage_sample_population,
}

UPDATERS = {
    "lmmaes": lmma_update,
    "maes": maes_update_fast,
    "sigma-es": sigma_only_update,
    "lmmaes-storage": storage_update,
}
