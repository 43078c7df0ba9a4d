"""Coherence of assistance: best average pure-state coherence over decompositions.

Every pure-state ensemble of ``rho`` with ``m`` members is obtained from the
eigendecomposition ``rho = sum_j lam_j |e_j><e_j|`` and an ``m x r`` matrix
``V`` with orthonormal columns::

    |psi~_k> = sum_j V_kj sqrt(lam_j) |e_j>,    p_k = <psi~_k|psi~_k>

The search runs simulated annealing over ``V``. A move rotates two rows of
``V`` by a random SU(2) element, which keeps ``V^dag V = I`` exactly and only
touches two ensemble members. Restarts are batched; each one draws from its
own generator seeded by ``(seed, restart_index)``, so adding restarts never
changes the trajectories of the existing ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TOL_RANK, PureStateEnsemble, StructureError, eigendecompose, sample_random
from .measures import coherence, uncertainty

__all__ = [
    "PureStateEnsemble",
    "CaConfig",
    "CaResult",
    "SandwichReport",
    "decomposition_from_unitary",
    "average_coherence",
    "coherence_of_assistance",
    "sandwich_check",
]


@dataclass(frozen=True)
class CaConfig:
    ensemble_size: int | None = None  # default min(max(rank**2, rank), 16)
    restarts: int = 32
    max_iter: int = 3000
    seed: int = 0
    patience: int = 200
    improve_tol: float = 1e-9
    settle: float = 0.5  # fraction of the schedule before stalls may stop a restart
    temp_start: float = 1e-2
    temp_end: float = 1e-9
    step_start: float = 0.8
    step_end: float = 1e-4


@dataclass
class CaResult:
    """Best decomposition found. ``value`` is a lower bound on ``C_a``."""

    value: float
    best_ensemble: PureStateEnsemble
    restarts_used: int
    converged: bool
    gap_to_U: float
    total: float
    measure: str
    max_reconstruction_residual: float = 0.0

    def to_dict(self):
        return {
            "measure": self.measure,
            "ca_lower_bound": self.value,
            "value_is": "lower_bound",
            "total_uncertainty": self.total,
            "gap_to_U": self.gap_to_U,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "max_reconstruction_residual": self.max_reconstruction_residual,
            "best_ensemble": self.best_ensemble.to_dict(),
        }


def _spectral_factor(rho):
    vals, vecs = eigendecompose(rho)
    keep = vals > TOL_RANK
    # row j is sqrt(lam_j) e_j^T
    return np.sqrt(vals[keep])[:, None] * vecs[:, keep].T


def _ensemble_from_rows(rows):
    weights = np.sum(np.abs(rows) ** 2, axis=1)
    keep = weights > 1e-15
    weights, rows = weights[keep], rows[keep]
    states = rows / np.sqrt(weights)[:, None]
    return PureStateEnsemble(weights / weights.sum(), states)


def decomposition_from_unitary(rho, mix):
    """Ensemble of ``rho`` generated by a left-unitary ``m x r`` mixing matrix."""
    factor = _spectral_factor(rho)
    r = factor.shape[0]
    mix = np.asarray(mix, dtype=complex)
    if mix.ndim != 2 or mix.shape[1] != r or mix.shape[0] < r:
        raise StructureError(f"mixing matrix must be m x {r} with m >= {r}, got shape {mix.shape}")
    residual = float(np.max(np.abs(mix.conj().T @ mix - np.eye(r))))
    if residual > 1e-9:
        raise StructureError(f"mixing matrix columns are not orthonormal: residual {residual:.3e}")
    return _ensemble_from_rows(mix @ factor)


def average_coherence(f, ensemble):
    probs = np.abs(ensemble.states) ** 2
    return float(np.dot(ensemble.weights, f(probs)))


def _member_values(f, rows):
    # p_k f(|psi~_k|^2 / p_k) for unnormalised rows; empty rows count 0
    probs = np.abs(rows) ** 2
    w = probs.sum(axis=-1)
    safe = np.where(w > 1e-300, w, 1.0)
    vals = w * f(probs / safe[..., None])
    return np.where(w > 1e-300, vals, 0.0)


def coherence_of_assistance(f, rho, cfg=None):
    """Search pure-state decompositions of ``rho`` for the largest average coherence."""
    cfg = cfg or CaConfig()
    rho = np.asarray(rho, dtype=complex)
    factor = _spectral_factor(rho)
    r, d = factor.shape
    total = uncertainty(f, rho)
    m = cfg.ensemble_size or min(max(r * r, r), 16)
    if m < r:
        raise ValueError(f"ensemble size {m} is below the rank {r}")

    n_res = cfg.restarts
    n_it = cfg.max_iter
    rngs = [np.random.default_rng([cfg.seed, k]) for k in range(n_res)]
    mix = np.stack([sample_random("haar_unitary", m, g)[:, :r] for g in rngs])
    rows = mix @ factor  # (R, m, d)

    if m == 1:
        ens = _ensemble_from_rows(rows[0])
        value = average_coherence(f, ens)
        return CaResult(value, ens, n_res, True, total - value, total, f.name)

    # per-restart random streams, drawn up front
    pair_a = np.empty((n_res, n_it), dtype=np.intp)
    pair_b = np.empty((n_res, n_it), dtype=np.intp)
    noise = np.empty((n_res, n_it, 3))
    for k, g in enumerate(rngs):
        a = g.integers(0, m, size=n_it)
        b = (a + g.integers(1, m, size=n_it)) % m
        pair_a[k], pair_b[k] = a, b
        noise[k, :, 0] = g.standard_normal(n_it)
        noise[k, :, 1] = g.uniform(0, 2 * np.pi, size=n_it)
        noise[k, :, 2] = g.random(n_it)

    frac = np.arange(n_it) / max(n_it - 1, 1)
    temps = cfg.temp_start * (cfg.temp_end / cfg.temp_start) ** frac
    steps = cfg.step_start * (cfg.step_end / cfg.step_start) ** frac

    member = _member_values(f, rows)
    current = member.sum(axis=1)
    best = current.copy()
    best_rows = rows.copy()
    best_mix = mix.copy()
    stall = np.zeros(n_res, dtype=int)
    active = np.ones(n_res, dtype=bool)
    idx = np.arange(n_res)
    recon = 0.0

    with np.errstate(over="ignore"):
        for t in range(n_it):
            if t % 500 == 0:
                # resum to keep the running objective from drifting
                live = idx[active]
                current[live] = member[live].sum(axis=1)
                mixed = np.einsum("rki,rkj->rij", rows[live], rows[live].conj())
                recon = max(recon, float(np.max(np.abs(mixed - rho))))
            live = idx[active]
            if live.size == 0:
                break
            a, b = pair_a[live, t], pair_b[live, t]
            step = noise[live, t]
            theta = steps[t] * step[:, 0]
            phase = np.exp(1j * step[:, 1])[:, None]
            c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
            ra, rb = rows[live, a], rows[live, b]
            new_a = c * ra - s * np.conj(phase) * rb
            new_b = s * phase * ra + c * rb
            vals = _member_values(f, np.stack([new_a, new_b]))
            va, vb = vals[0], vals[1]
            delta = va + vb - member[live, a] - member[live, b]
            accept = (delta > 0) | (step[:, 2] < np.exp(delta / temps[t]))
            if accept.any():
                acc = live[accept]
                aa, bb = a[accept], b[accept]
                rows[acc, aa] = new_a[accept]
                rows[acc, bb] = new_b[accept]
                member[acc, aa] = va[accept]
                member[acc, bb] = vb[accept]
                ma, mb = mix[acc, aa], mix[acc, bb]
                cc, ss, ph = c[accept], s[accept], phase[accept]
                mix[acc, aa] = cc * ma - ss * np.conj(ph) * mb
                mix[acc, bb] = ss * ph * ma + cc * mb
                current[acc] += delta[accept]

            gain = current[live] - best[live]
            up = live[gain > 0]
            if up.size:
                best[up] = current[up]
                best_rows[up] = rows[up]
                best_mix[up] = mix[up]
            big = gain > cfg.improve_tol
            stall[live] = np.where(big, 0, stall[live] + 1)
            if t >= cfg.settle * n_it:
                active[live[stall[live] >= cfg.patience]] = False

    final = np.einsum("rki,rkj->rij", best_rows, best_rows.conj())
    recon = max(recon, float(np.max(np.abs(final - rho))))
    winner = int(np.argmax(best))
    ens = decomposition_from_unitary(rho, best_mix[winner])
    value = average_coherence(f, ens)
    converged = bool(stall[winner] >= cfg.patience)
    return CaResult(value, ens, n_res, converged, total - value, total, f.name, recon)


@dataclass
class SandwichReport:
    coherence: float
    ca_lower: float
    total: float
    tol: float = 1e-6

    @property
    def lower_margin(self):
        return self.ca_lower - self.coherence

    @property
    def upper_margin(self):
        return self.total - self.ca_lower

    @property
    def ok(self):
        return self.lower_margin >= -self.tol and self.upper_margin >= -self.tol

    def to_dict(self):
        return {
            "coherence": self.coherence,
            "ca_lower": self.ca_lower,
            "total": self.total,
            "lower_margin": self.lower_margin,
            "upper_margin": self.upper_margin,
            "ok": self.ok,
        }


def sandwich_check(f, rho, ca_result=None, cfg=None, tol=1e-6):
    """Compare ``C(rho) <= C_a(rho) <= U(rho)`` for a function with a pinned coherence."""
    if ca_result is None:
        ca_result = coherence_of_assistance(f, rho, cfg)
    return SandwichReport(coherence(f, rho), ca_result.value, uncertainty(f, rho), tol)
