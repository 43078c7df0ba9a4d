"""Uncertainty measures generated by symmetric concave functions.

A :class:`SymmetricConcaveFunction` ``f`` on the probability simplex gives the
total uncertainty ``U(rho) = f(diag(rho))``. The three built-in functions come
with a pinned split ``U = C + D`` into a quantum part (coherence) and a
classical part (mixedness):

=========  ======================  ===============================
name       f(p)                    quantum part
=========  ======================  ===============================
var        1 - sum p**2            skew information / Q(rho)
entropy    -sum p log p            relative entropy of coherence
fidelity   1 - max p               geometric coherence
=========  ======================  ===============================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .core import StructureError, matrix_sqrt, probability_vector

__all__ = [
    "SymmetricConcaveFunction",
    "MeasureReport",
    "GeometricConfig",
    "GeometricCoherence",
    "f_var",
    "f_max",
    "entropy_function",
    "get_function",
    "register_function",
    "check_axioms",
    "builtin_functions",
    "uncertainty",
    "pure_state_coherence",
    "coherence",
    "skew_information",
    "von_neumann_entropy",
    "shannon_entropy",
    "u_var",
    "u_entropy",
    "u_geometric",
    "geometric_coherence",
    "majorizes",
    "is_maximally_uncertain",
    "measure_report",
    "MEASURE_ALIASES",
]


@dataclass(frozen=True)
class SymmetricConcaveFunction:
    """A nonnegative symmetric concave function on the probability simplex.

    ``func`` maps an array whose last axis is a probability vector to the
    value(s) of ``f``; built-ins broadcast over leading axes.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    vectorized: bool = True
    log_base: float | None = None

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if self.vectorized or p.ndim == 1:
            return self.func(p)
        return np.apply_along_axis(self.func, -1, p)


def _var(p):
    return 1.0 - np.sum(p * p, axis=-1)


def _max(p):
    return 1.0 - np.max(p, axis=-1)


def _entropy(p, base):
    p = np.clip(p, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -np.sum(terms, axis=-1) / np.log(base)


f_var = SymmetricConcaveFunction("var", _var)
f_max = SymmetricConcaveFunction("fidelity", _max)


def entropy_function(log_base=2.0):
    if not log_base > 1:
        raise ValueError(f"log_base must exceed 1, got {log_base}")
    return SymmetricConcaveFunction(
        "entropy", lambda p: _entropy(p, log_base), log_base=float(log_base)
    )


MEASURE_ALIASES = {
    "var": "var",
    "variance": "var",
    "entropy": "entropy",
    "ent": "entropy",
    "shannon": "entropy",
    "fidelity": "fidelity",
    "geometric": "fidelity",
    "max": "fidelity",
}

_REGISTRY: dict[str, SymmetricConcaveFunction] = {}


def builtin_functions(log_base=2.0):
    return [f_var, entropy_function(log_base), f_max]


def get_function(name, log_base=2.0):
    """Look up a built-in (by any alias) or registered function."""
    key = MEASURE_ALIASES.get(name, name)
    if key == "var":
        return f_var
    if key == "entropy":
        return entropy_function(log_base)
    if key == "fidelity":
        return f_max
    try:
        return _REGISTRY[key]
    except KeyError:
        raise KeyError(f"unknown measure {name!r}") from None


def check_axioms(f, dims=(2, 3, 4), samples=200, seed=0, tol=1e-9):
    """Sample the simplex and return a list of axiom violations (empty if none)."""
    rng = np.random.default_rng(seed)
    problems = []
    for d in dims:
        vertex = np.zeros(d)
        vertex[0] = 1.0
        v0 = float(f(vertex))
        if abs(v0) > tol:
            problems.append(f"d={d}: f(1,0,...,0) = {v0:.3e}, expected 0")
        for _ in range(samples):
            x, y = rng.dirichlet(np.ones(d), size=2)
            lam = rng.random()
            fx, fy = float(f(x)), float(f(y))
            if fx < -tol:
                problems.append(f"d={d}: f(x) = {fx:.3e} is negative")
            if fx <= tol:
                problems.append(f"d={d}: f vanishes at interior point {np.round(x, 6).tolist()}")
            fpx = float(f(rng.permutation(x)))
            if abs(fpx - fx) > tol:
                problems.append(f"d={d}: not permutation symmetric (|diff| = {abs(fpx - fx):.3e})")
            mix = float(f(lam * x + (1 - lam) * y))
            if mix < lam * fx + (1 - lam) * fy - tol:
                problems.append(f"d={d}: concavity fails by {lam * fx + (1 - lam) * fy - mix:.3e}")
            if len(problems) > 10:
                return problems
    return problems


def register_function(name, func, vectorized=False, **check_kwargs):
    """Add a custom ``f`` to the catalog after checking its axioms by sampling."""
    if name in MEASURE_ALIASES:
        raise ValueError(f"{name!r} is a built-in measure name")
    f = SymmetricConcaveFunction(name, func, vectorized=vectorized)
    problems = check_axioms(f, **check_kwargs)
    if problems:
        raise ValueError(f"{name!r} is not a nonnegative symmetric concave function: " + "; ".join(problems[:3]))
    _REGISTRY[name] = f
    return f


def _diag(rho):
    return np.real(np.diag(np.asarray(rho)))


def uncertainty(f, rho):
    """Total uncertainty ``f(diag(rho))``."""
    return float(f(probability_vector(_diag(rho))))


def pure_state_coherence(f, psi):
    """Coherence of a pure state, ``f(|psi_i|**2)``."""
    psi = np.asarray(psi, dtype=complex)
    return float(f(np.abs(psi) ** 2))


def shannon_entropy(p, log_base=2.0):
    return float(_entropy(np.asarray(p, dtype=float), log_base))


def von_neumann_entropy(rho, log_base=2.0):
    return float(_entropy(np.linalg.eigvalsh(np.asarray(rho)), log_base))


def skew_information(rho):
    """Sum over basis projectors of the Wigner-Yanase skew information."""
    s = matrix_sqrt(rho)
    return float(1.0 - np.sum(np.real(np.diag(s)) ** 2))


@dataclass
class MeasureReport:
    measure: str
    total: float
    quantum: float | None
    classical: float | None
    log_base: float | None = None
    decomposition: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        meta = {"log_base": self.log_base, "decomposition": self.decomposition}
        meta.update(self.extra)
        return {
            "measure": self.measure,
            "total": self.total,
            "quantum": self.quantum,
            "classical": self.classical,
            "meta": meta,
        }


def u_var(rho, decomposition="skew"):
    """Variance-based uncertainty ``1 - sum rho_ii**2`` and one of its two splits.

    ``decomposition="skew"``: quantum part is the skew information
    ``1 - sum <i|sqrt(rho)|i>**2``. ``decomposition="linear_entropy"``: the
    classical part is the linear entropy ``1 - Tr rho**2`` and the quantum part
    is the linear entropy gained by dephasing.
    """
    p = probability_vector(_diag(rho))
    total = float(_var(p))
    if decomposition == "skew":
        quantum = skew_information(rho)
    elif decomposition == "linear_entropy":
        rho = np.asarray(rho)
        quantum = float(np.real(np.sum(np.abs(rho) ** 2)) - np.sum(p * p))
    else:
        raise ValueError(f"unknown decomposition {decomposition!r}")
    return MeasureReport("var", total, quantum, total - quantum, decomposition=decomposition)


def u_entropy(rho, log_base=2.0):
    """Shannon entropy of the diagonal, split as ``S(rho) + C_r(rho)``."""
    if not log_base > 1:
        raise ValueError(f"log_base must exceed 1, got {log_base}")
    total = shannon_entropy(probability_vector(_diag(rho)), log_base)
    classical = von_neumann_entropy(rho, log_base)
    return MeasureReport(
        "entropy", total, total - classical, classical,
        log_base=float(log_base), decomposition="relative_entropy",
    )


@dataclass(frozen=True)
class GeometricConfig:
    """Settings for the multiplicative-weights search over diagonal states."""

    restarts: int = 16
    max_iter: int = 2000
    step: float = 1.0
    h: float = 1e-6
    seed: int = 0
    tol: float = 1e-13
    patience: int = 20


class GeometricCoherence(NamedTuple):
    value: float
    sigma: np.ndarray
    converged: bool


def _root_fidelity_batch(sqrt_rho, sigmas):
    # sqrt(F(rho, diag(s))) = || sqrt(rho) diag(sqrt(s)) ||_tr for each row s
    prod = sqrt_rho[None] * np.sqrt(np.clip(sigmas, 0.0, None))[:, None, :]
    return np.sum(np.linalg.svd(prod, compute_uv=False), axis=-1)


def _ascend(sqrt_rho, start, cfg):
    d = start.size
    sigma = start.copy()
    best = _root_fidelity_batch(sqrt_rho, sigma[None])[0]
    eta = cfg.step
    eye = np.eye(d)
    stall = 0
    for _ in range(cfg.max_iter):
        up = sigma + cfg.h * eye
        lo_step = np.minimum(cfg.h, sigma)
        lo = sigma - lo_step[:, None] * eye
        vals = _root_fidelity_batch(sqrt_rho, np.vstack([up, lo]))
        grad = (vals[:d] - vals[d:]) / (cfg.h + lo_step)
        while True:
            cand = sigma * np.exp(eta * (grad - grad.max()))
            cand /= cand.sum()
            val = _root_fidelity_batch(sqrt_rho, cand[None])[0]
            if val > best:
                gain = val - best
                sigma, best = cand, val
                eta = min(eta * 2.0, 1e6)
                break
            eta *= 0.5
            if eta < 1e-12:
                return sigma, best, True
        stall = stall + 1 if gain < cfg.tol else 0
        if stall >= cfg.patience:
            return sigma, best, True
    return sigma, best, False


def geometric_coherence(rho, cfg=None):
    """``1 - max F(rho, sigma)`` over diagonal states, found by restarted ascent.

    The certain states and ``diag(rho)`` itself are always among the
    candidates, so the value never exceeds ``1 - max_i rho_ii``. The result is
    an upper bound on the true geometric coherence; ``converged`` is False if
    any restart hit ``max_iter``.
    """
    cfg = cfg or GeometricConfig()
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    sqrt_rho = matrix_sqrt(rho)
    p = probability_vector(_diag(rho))

    cands = np.vstack([np.eye(d), p[None]])
    vals = _root_fidelity_batch(sqrt_rho, cands)
    k = int(np.argmax(vals))
    best_val, best_sigma = vals[k], cands[k]
    converged = True
    uniform = np.full(d, 1.0 / d)
    for r in range(cfg.restarts):
        if r == 0:
            start = 0.5 * p + 0.5 * uniform
        else:
            start = np.random.default_rng([cfg.seed, r]).dirichlet(np.ones(d))
        sigma, val, ok = _ascend(sqrt_rho, start, cfg)
        converged &= ok
        if val > best_val:
            best_val, best_sigma = val, sigma
    fid = min(float(best_val) ** 2, 1.0)
    return GeometricCoherence(1.0 - fid, best_sigma, converged)


def u_geometric(rho, cfg=None):
    """Geometric uncertainty ``1 - max_i rho_ii`` split into ``C_f + D_f``."""
    p = probability_vector(_diag(rho))
    total = float(1.0 - p.max())
    gc = geometric_coherence(rho, cfg)
    quantum = min(gc.value, total)
    return MeasureReport(
        "fidelity", total, quantum, total - quantum, decomposition="geometric",
        extra={"closest_incoherent": gc.sigma.tolist(), "converged": gc.converged},
    )


def coherence(f, rho, cfg=None):
    """The pinned convex extension of ``f`` from pure to mixed states."""
    if f.name == "var":
        return skew_information(rho)
    if f.name == "entropy":
        return u_entropy(rho, f.log_base).quantum
    if f.name == "fidelity":
        return geometric_coherence(rho, cfg).value
    raise ValueError(f"no mixed-state coherence is pinned for {f.name!r}")


def measure_report(name, rho, log_base=2.0, cfg=None):
    """Dispatch by measure name; ``var`` yields both splits."""
    key = MEASURE_ALIASES.get(name)
    if key == "var":
        return [u_var(rho, "skew"), u_var(rho, "linear_entropy")]
    if key == "entropy":
        return [u_entropy(rho, log_base)]
    if key == "fidelity":
        return [u_geometric(rho, cfg)]
    if name in _REGISTRY:
        f = _REGISTRY[name]
        total = uncertainty(f, rho)
        # no mixed-state split is pinned for custom functions
        return [MeasureReport(name, total, None, None)]
    raise KeyError(f"unknown measure {name!r}")


def majorizes(x, y, tol=1e-9):
    """True if ``x`` majorizes ``y`` (``y`` is majorized by ``x``)."""
    x = np.sort(np.asarray(x, dtype=float))[::-1]
    y = np.sort(np.asarray(y, dtype=float))[::-1]
    if x.shape != y.shape:
        raise StructureError(f"dimension mismatch: {x.size} vs {y.size}")
    if abs(x.sum() - y.sum()) > tol:
        return False
    return bool(np.all(np.cumsum(x) >= np.cumsum(y) - tol))


def is_maximally_uncertain(rho, tol=1e-9):
    p = _diag(rho)
    return bool(np.all(np.abs(p - 1.0 / p.size) <= tol))
