"""Brute-force exact computations on small graphs.

Everything here enumerates states directly (in log-space, combined with
log-sum-exp), guarded by hard size limits so an accidental 2^40 enumeration
fails fast instead of hanging. State index convention: bit i of a state
index encodes spin i, set bit = +1; edge-configuration index bit e encodes
activation of edge e (order of IsingGraph.edges).

The component search here is an independent adjacency-list graph search, not
the union-find used by the sampling kernel, so the two can check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .ais import Schedule
from .model import IsingGraph

MAX_PV_VERTICES = 24
MAX_PVE_BITS = 24
MAX_PE_EDGES = 20
MAX_TRANSITION_VERTICES = 9
MAX_TRANSITION_EDGES = 16
MAX_TRANSFER_ROWS = 16

_BLOCK = 1 << 16


class SizeGuardError(ValueError):
    """Model exceeds the brute-force enumeration limits."""


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    """Normalized probabilities over enumerated states plus log partition function.

    probs is 1-d (2^n over spin states, or 2^E over edge configs) except for
    the joint distribution, where it is (2^n, 2^E) with rows indexing spins.
    """

    probs: np.ndarray
    log_z: float


def spin_states(n: int) -> np.ndarray:
    """All 2^n spin configurations as a (2^n, n) ±1 matrix (bit i -> spin i)."""
    return _spin_block(0, 1 << n, n)


def _spin_block(start: int, stop: int, n: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint32)[:, None]
    bits = (idx >> np.arange(n, dtype=np.uint32)[None, :]) & 1
    return (2 * bits.astype(np.int8) - 1)


def state_magnetizations(n: int) -> np.ndarray:
    """Total magnetization per state index: 2*popcount - n."""
    idx = np.arange(1 << n, dtype=np.uint32)
    return 2 * np.bitwise_count(idx).astype(np.int64) - n


def _log_weights_pV(g: IsingGraph, field_scale: float) -> np.ndarray:
    n = g.n_interior
    h = field_scale * g.field
    e0, e1 = g.edges[:, 0], g.edges[:, 1]
    logw = np.empty(1 << n)
    for start in range(0, 1 << n, _BLOCK):
        stop = min(start + _BLOCK, 1 << n)
        spins = _spin_block(start, stop, n)
        if g.n_edges:
            coupling = np.sum(spins[:, e0] * spins[:, e1], axis=1, dtype=np.int64)
        else:
            coupling = np.zeros(stop - start, dtype=np.int64)
        logw[start:stop] = g.beta * (coupling + spins @ h)
    return logw


def enumerate_pV(g: IsingGraph, field_scale: float) -> ExactDistribution:
    """Exact spin distribution: p(s) ∝ exp(beta*(Σ s_i s_j + field_scale*Σ h_i s_i))."""
    if g.n_interior > MAX_PV_VERTICES:
        raise SizeGuardError(
            f"enumerate_pV needs n_interior <= {MAX_PV_VERTICES}, got {g.n_interior}"
        )
    logw = _log_weights_pV(g, field_scale)
    log_z = float(logsumexp(logw))
    return ExactDistribution(np.exp(logw - log_z), log_z)


def _aligned_bits_and_field(g: IsingGraph, field_scale: float):
    """Per spin state: bitmask of aligned edges and the scaled field sum."""
    n = g.n_interior
    h = field_scale * g.field
    e0, e1 = g.edges[:, 0], g.edges[:, 1]
    aligned = np.zeros(1 << n, dtype=np.uint32)
    fld = np.empty(1 << n)
    for start in range(0, 1 << n, _BLOCK):
        stop = min(start + _BLOCK, 1 << n)
        spins = _spin_block(start, stop, n)
        acc = np.zeros(stop - start, dtype=np.uint32)
        for e in range(g.n_edges):
            eq = spins[:, e0[e]] == spins[:, e1[e]]
            acc |= eq.astype(np.uint32) << np.uint32(e)
        aligned[start:stop] = acc
        fld[start:stop] = spins @ h
    return aligned, fld


def enumerate_pVE(g: IsingGraph, field_scale: float) -> ExactDistribution:
    """Exact joint spin/edge distribution as a (2^n, 2^E) matrix.

    Per-edge factor: active needs aligned endpoints and carries 1-exp(-2*beta);
    inactive carries exp(-2*beta). Field factor as in enumerate_pV.
    """
    n, n_edges = g.n_interior, g.n_edges
    if n + n_edges > MAX_PVE_BITS:
        raise SizeGuardError(
            f"enumerate_pVE needs n_interior + n_edges <= {MAX_PVE_BITS}, "
            f"got {n} + {n_edges}"
        )
    log_q = -2.0 * g.beta
    log_p = float(np.log(-np.expm1(-2.0 * g.beta)))
    aligned, fld = _aligned_bits_and_field(g, field_scale)
    logw = np.broadcast_to((g.beta * fld)[:, None], (1 << n, 1 << n_edges)).copy()
    w_idx = np.arange(1 << n_edges, dtype=np.uint32)
    for e in range(n_edges):
        w_on = ((w_idx >> np.uint32(e)) & 1).astype(bool)[None, :]
        s_aligned = ((aligned >> np.uint32(e)) & 1).astype(bool)[:, None]
        logw += np.where(w_on, np.where(s_aligned, log_p, -np.inf), log_q)
    log_z = float(logsumexp(logw))
    return ExactDistribution(np.exp(logw - log_z), log_z)


def _components_search(n_vertices: int, pairs) -> tuple[list[int], int]:
    # Adjacency-list graph search, deliberately separate from sw's union-find.
    adj: list[list[int]] = [[] for _ in range(n_vertices)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    labels = [-1] * n_vertices
    count = 0
    for start in range(n_vertices):
        if labels[start] >= 0:
            continue
        labels[start] = count
        frontier = [start]
        while frontier:
            v = frontier.pop()
            for u in adj[v]:
                if labels[u] < 0:
                    labels[u] = count
                    frontier.append(u)
        count += 1
    return labels, count


def _log_2cosh(x: np.ndarray) -> np.ndarray:
    # log(exp(x) + exp(-x)) without overflow
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax))


def enumerate_pE(g: IsingGraph, field_scale: float) -> ExactDistribution:
    """Exact edge-configuration distribution.

    Weight of w: Π_{active}(1-e^{-2β}) · Π_{inactive} e^{-2β} · Π_γ 2cosh(β h_γ)
    over the components γ of the active subgraph.
    """
    n, n_edges = g.n_interior, g.n_edges
    if n_edges > MAX_PE_EDGES:
        raise SizeGuardError(
            f"enumerate_pE needs n_edges <= {MAX_PE_EDGES}, got {n_edges}"
        )
    log_q = -2.0 * g.beta
    log_p = float(np.log(-np.expm1(-2.0 * g.beta)))
    h = field_scale * g.field
    edge_list = [(int(a), int(b)) for a, b in g.edges]
    logw = np.empty(1 << n_edges)
    for w in range(1 << n_edges):
        pairs = [edge_list[e] for e in range(n_edges) if (w >> e) & 1]
        labels, count = _components_search(n, pairs)
        h_gamma = np.bincount(labels, weights=h, minlength=count)
        n_active = len(pairs)
        logw[w] = (
            n_active * log_p
            + (n_edges - n_active) * log_q
            + float(np.sum(_log_2cosh(g.beta * h_gamma)))
        )
    log_z = float(logsumexp(logw))
    return ExactDistribution(np.exp(logw - log_z), log_z)


def exact_sw_transition(g: IsingGraph, field_scale: float) -> np.ndarray:
    """Exact one-step transition matrix P(s, t) = Σ_w P(w | s) P(t | w)."""
    n, n_edges = g.n_interior, g.n_edges
    if n > MAX_TRANSITION_VERTICES or n_edges > MAX_TRANSITION_EDGES:
        raise SizeGuardError(
            "exact_sw_transition needs n_interior <= "
            f"{MAX_TRANSITION_VERTICES} and n_edges <= {MAX_TRANSITION_EDGES}, "
            f"got {n} and {n_edges}"
        )
    n_states = 1 << n
    n_wconf = 1 << n_edges
    spins = spin_states(n).astype(np.float64)
    aligned, _ = _aligned_bits_and_field(g, field_scale)
    a_pop = np.bitwise_count(aligned).astype(np.int64)
    p_act = float(-np.expm1(-2.0 * g.beta))
    pow_p = p_act ** np.arange(n_edges + 1)
    pow_q = (1.0 - p_act) ** np.arange(n_edges + 1)
    h = field_scale * g.field
    edge_list = [(int(a), int(b)) for a, b in g.edges]

    transition = np.zeros((n_states, n_states))
    block = 1 << 12
    for start in range(0, n_wconf, block):
        stop = min(start + block, n_wconf)
        w_arr = np.arange(start, stop, dtype=np.uint32)
        w_pop = np.bitwise_count(w_arr).astype(np.int64)
        compatible = (w_arr[:, None] & ~aligned[None, :]) == 0
        exponent = np.clip(a_pop[None, :] - w_pop[:, None], 0, n_edges)
        given_s = np.where(
            compatible, pow_p[w_pop][:, None] * pow_q[exponent], 0.0
        )
        given_w = np.empty((stop - start, n_states))
        for i, w in enumerate(range(start, stop)):
            pairs = [edge_list[e] for e in range(n_edges) if (w >> e) & 1]
            labels, count = _components_search(n, pairs)
            lab = np.asarray(labels)
            indicator = np.zeros((n, count))
            indicator[np.arange(n), lab] = 1.0
            comp_sum = spins @ indicator
            comp_size = np.bincount(lab, minlength=count).astype(np.float64)
            p_plus = expit(2.0 * g.beta * np.bincount(lab, weights=h, minlength=count))
            factors = np.where(
                comp_sum == comp_size,
                p_plus,
                np.where(comp_sum == -comp_size, 1.0 - p_plus, 0.0),
            )
            given_w[i] = factors.prod(axis=1)
        transition += given_s.T @ given_w
    return transition


def exact_ais_mean_weight(g: IsingGraph, schedule: Schedule) -> float:
    """Exact expectation of the annealing weight: Z(θ_L) / Z(θ_0) = Z(1)/Z(0)."""
    if g.n_interior > MAX_PV_VERTICES:
        raise SizeGuardError(
            f"exact_ais_mean_weight needs n_interior <= {MAX_PV_VERTICES}, "
            f"got {g.n_interior}"
        )
    log_z1 = float(logsumexp(_log_weights_pV(g, float(schedule.thetas[-1]))))
    log_z0 = float(logsumexp(_log_weights_pV(g, float(schedule.thetas[0]))))
    return float(np.exp(log_z1 - log_z0))


def transfer_matrix_log_z(n1: int, n2: int, beta: float, field: np.ndarray) -> float:
    """log Z for the n1 x n2 grid by column transfer, independent of the enumerator.

    Vertex (i, j) must have id i*n2 + j and field[i*n2 + j]; the field passed
    here is the already-scaled one. Works column by column over i, carrying a
    log-space vector over the 2^{n2} column states.
    """
    if n2 > MAX_TRANSFER_ROWS:
        raise SizeGuardError(
            f"transfer_matrix_log_z needs n2 <= {MAX_TRANSFER_ROWS}, got {n2}"
        )
    field = np.asarray(field, dtype=np.float64).reshape(n1, n2)
    col_states = spin_states(n2).astype(np.float64)
    if n2 > 1:
        intra = beta * np.sum(col_states[:, :-1] * col_states[:, 1:], axis=1)
    else:
        intra = np.zeros(col_states.shape[0])
    inter = beta * (col_states @ col_states.T)
    logv = intra + beta * (col_states @ field[0])
    for i in range(1, n1):
        logv = logsumexp(logv[:, None] + inter, axis=0)
        logv += intra + beta * (col_states @ field[i])
    return float(logsumexp(logv))
